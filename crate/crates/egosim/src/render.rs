//! Volume rendering of rays, and the sensors built on it: RGB cameras,
//! depth cameras, and spinning LiDAR.
//!
//! A ray is marched with `N` samples; each sample contributes transparency
//! `alpha_i = 1 - exp(-sigma_i * delta_i)` attenuated by the transmittance
//! accumulated in front of it, `T_i = exp(-sum_{j<i} sigma_j * delta_j)`.
//! Ray color is `sum alpha_i T_i c_i`, accumulated opacity is
//! `sum alpha_i T_i`, and expected depth is the opacity-normalized mean
//! sample distance. `delta_i` is the gap to the next sample; the last sample
//! closes against `t_far`.

use crate::field::{RadianceField, RadianceSample};
use crate::geometry::{pixel_ray, CameraIntrinsics, GeometryError, Pose, Ray, Vec3};
use crate::rng::{derive_seed, Stream};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("ray sampling needs at least one sample per ray")]
    ZeroSamples,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("invalid lidar spec: {0}")]
    InvalidLidarSpec(String),
    #[error("image buffer has {got} pixels, expected {expected}")]
    BadPixelCount { got: usize, expected: usize },
}

/// Accumulated opacity below which a ray's expected depth is meaningless
/// and reported as invalid.
pub const DEPTH_OPACITY_FLOOR: f64 = 0.05;

/// How sample distances are placed along a ray.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingStrategy {
    /// Midpoints of `N` equal strata. Deterministic, no RNG consumed.
    Uniform,
    /// One uniform jitter per stratum, drawn from a counter-based stream
    /// keyed on the sampling seed, so results are order-independent.
    Stratified,
}

/// Per-ray sampling configuration. For image and point-cloud renders the
/// seed of the per-ray stream is derived from this seed and the ray's
/// (column, row) or (beam, azimuth) indices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RaySampling {
    pub count: usize,
    pub strategy: SamplingStrategy,
    #[serde(default)]
    pub seed: u64,
}

impl RaySampling {
    pub fn uniform(count: usize) -> Self {
        Self { count, strategy: SamplingStrategy::Uniform, seed: 0 }
    }

    pub fn stratified(count: usize, seed: u64) -> Self {
        Self { count, strategy: SamplingStrategy::Stratified, seed }
    }

    /// Same configuration, different stream key.
    pub fn reseeded(&self, tags: &[u64]) -> Self {
        Self { seed: derive_seed(self.seed, tags), ..*self }
    }
}

/// Sample distances for one ray: strictly increasing, exactly `count` of
/// them, inside (t_near, t_far].
pub fn sample_distances(ray: &Ray, sampling: &RaySampling) -> Result<Vec<f64>, RenderError> {
    if sampling.count == 0 {
        return Err(RenderError::ZeroSamples);
    }
    let n = sampling.count;
    let stratum = (ray.t_far - ray.t_near) / n as f64;
    let ts = match sampling.strategy {
        SamplingStrategy::Uniform => (0..n)
            .map(|i| ray.t_near + (i as f64 + 0.5) * stratum)
            .collect(),
        SamplingStrategy::Stratified => {
            let mut stream = Stream::keyed(sampling.seed, &[]);
            (0..n)
                .map(|i| ray.t_near + (i as f64 + stream.next_open_f64()) * stratum)
                .collect()
        }
    };
    Ok(ts)
}

/// Gap from each sample to the next; the last gap closes against `t_far`.
pub fn sample_gaps(ts: &[f64], t_far: f64) -> Vec<f64> {
    let n = ts.len();
    (0..n)
        .map(|i| if i + 1 < n { ts[i + 1] - ts[i] } else { t_far - ts[i] })
        .collect()
}

/// Radiance accumulated along one ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayRadiance {
    /// Composited color, channels in [0, 1].
    pub color: Vec3,
    /// Accumulated opacity, `sum alpha_i T_i` in [0, 1].
    pub opacity: f64,
    /// Opacity-normalized expected depth in meters; `None` when accumulated
    /// opacity falls below [`DEPTH_OPACITY_FLOOR`].
    pub depth: Option<f64>,
}

/// Running-transmittance walk shared by rendering and training so the two
/// can never disagree about the compositing arithmetic.
#[derive(Debug, Clone)]
pub(crate) struct TransmittanceWalk {
    transmittance: f64,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct SegmentWeight {
    pub alpha: f64,
    /// Transmittance in FRONT of this segment (T_i).
    pub transmittance: f64,
    /// alpha_i * T_i.
    pub weight: f64,
}

impl TransmittanceWalk {
    pub fn new() -> Self {
        Self { transmittance: 1.0 }
    }

    pub fn step(&mut self, sigma: f64, delta: f64) -> SegmentWeight {
        let alpha = 1.0 - (-sigma * delta).exp();
        let seg = SegmentWeight { alpha, transmittance: self.transmittance, weight: alpha * self.transmittance };
        self.transmittance *= 1.0 - alpha;
        seg
    }

    /// Transmittance behind everything stepped so far (T_{N+1}).
    pub fn remaining(&self) -> f64 {
        self.transmittance
    }
}

/// Composite explicit `(distance, gap, sample)` segments. This is the raw
/// compositing rule; [`composite_ray`] feeds it from a sampled ray.
pub fn composite_segments(
    segments: impl IntoIterator<Item = (f64, f64, RadianceSample)>,
) -> RayRadiance {
    let mut walk = TransmittanceWalk::new();
    let mut color = Vec3::zeros();
    let mut opacity = 0.0;
    let mut depth_sum = 0.0;
    for (t, delta, sample) in segments {
        let seg = walk.step(sample.density, delta);
        color += sample.color * seg.weight;
        opacity += seg.weight;
        depth_sum += seg.weight * t;
    }
    let depth = (opacity >= DEPTH_OPACITY_FLOOR).then(|| depth_sum / opacity);
    // The true sums are bounded by 1; shave off accumulated rounding dust so
    // published channels and opacity honor the [0, 1] contract exactly.
    RayRadiance { color: color.map(|c| c.min(1.0)), opacity: opacity.min(1.0), depth }
}

/// March one ray through a field.
pub fn composite_ray<F: RadianceField + ?Sized>(
    ray: &Ray,
    field: &F,
    sampling: &RaySampling,
) -> Result<RayRadiance, RenderError> {
    let ts = sample_distances(ray, sampling)?;
    let gaps = sample_gaps(&ts, ray.t_far);
    Ok(composite_segments(
        ts.iter()
            .zip(gaps.iter())
            .map(|(&t, &delta)| (t, delta, field.sample(&ray.point_at(t), &ray.direction))),
    ))
}

// ---------------------------------------------------------------------------
// Images
// ---------------------------------------------------------------------------

/// Linear-RGB image, row-major, f64 channels in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    width: u32,
    height: u32,
    pixels: Vec<Vec3>,
}

impl RgbImage {
    pub fn new(width: u32, height: u32) -> Self {
        Self { width, height, pixels: vec![Vec3::zeros(); (width * height) as usize] }
    }

    pub fn from_pixels(width: u32, height: u32, pixels: Vec<Vec3>) -> Result<Self, RenderError> {
        if pixels.len() != (width * height) as usize {
            return Err(RenderError::BadPixelCount {
                got: pixels.len(),
                expected: (width * height) as usize,
            });
        }
        Ok(Self { width, height, pixels })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixel(&self, u: u32, v: u32) -> Vec3 {
        self.pixels[(v * self.width + u) as usize]
    }

    pub fn set_pixel(&mut self, u: u32, v: u32, value: Vec3) {
        self.pixels[(v * self.width + u) as usize] = value;
    }

    pub fn pixels(&self) -> &[Vec3] {
        &self.pixels
    }
}

/// Depth image in meters; 0.0 encodes an invalid pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    width: u32,
    height: u32,
    pixels: Vec<f64>,
}

impl DepthImage {
    pub const INVALID: f64 = 0.0;

    pub fn new(width: u32, height: u32) -> Self {
        Self { width, height, pixels: vec![Self::INVALID; (width * height) as usize] }
    }

    pub fn from_pixels(width: u32, height: u32, pixels: Vec<f64>) -> Result<Self, RenderError> {
        if pixels.len() != (width * height) as usize {
            return Err(RenderError::BadPixelCount {
                got: pixels.len(),
                expected: (width * height) as usize,
            });
        }
        Ok(Self { width, height, pixels })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixel(&self, u: u32, v: u32) -> f64 {
        self.pixels[(v * self.width + u) as usize]
    }

    pub fn set_pixel(&mut self, u: u32, v: u32, value: f64) {
        self.pixels[(v * self.width + u) as usize] = value;
    }

    pub fn is_valid(&self, u: u32, v: u32) -> bool {
        self.pixel(u, v) > 0.0
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }
}

fn render_pixels<T, F>(
    k: &CameraIntrinsics,
    cam_pose: &Pose,
    field: &F,
    sampling: &RaySampling,
    t_near: f64,
    t_far: f64,
    shade: impl Fn(RayRadiance) -> T + Sync,
) -> Result<Vec<T>, RenderError>
where
    T: Send,
    F: RadianceField + ?Sized,
{
    if sampling.count == 0 {
        return Err(RenderError::ZeroSamples);
    }
    // Row-parallel with an ordered collect: output is identical for any
    // worker count.
    let rows: Vec<Result<Vec<T>, RenderError>> = (0..k.height)
        .into_par_iter()
        .map(|v| {
            (0..k.width)
                .map(|u| {
                    let ray = pixel_ray(u, v, k, cam_pose, t_near, t_far)?;
                    let per_pixel = sampling.reseeded(&[u as u64, v as u64]);
                    Ok(shade(composite_ray(&ray, field, &per_pixel)?))
                })
                .collect()
        })
        .collect();
    let mut pixels = Vec::with_capacity((k.width * k.height) as usize);
    for row in rows {
        pixels.extend(row?);
    }
    Ok(pixels)
}

/// Render an RGB image: one composited ray through each pixel center.
pub fn render_camera<F: RadianceField + ?Sized>(
    k: &CameraIntrinsics,
    cam_pose: &Pose,
    field: &F,
    sampling: &RaySampling,
    t_near: f64,
    t_far: f64,
) -> Result<RgbImage, RenderError> {
    let pixels = render_pixels(k, cam_pose, field, sampling, t_near, t_far, |r| r.color)?;
    RgbImage::from_pixels(k.width, k.height, pixels)
}

/// Render an expected-depth image; rays without enough accumulated opacity
/// produce the invalid value 0.
pub fn render_depth<F: RadianceField + ?Sized>(
    k: &CameraIntrinsics,
    cam_pose: &Pose,
    field: &F,
    sampling: &RaySampling,
    t_near: f64,
    t_far: f64,
) -> Result<DepthImage, RenderError> {
    let pixels = render_pixels(k, cam_pose, field, sampling, t_near, t_far, |r| {
        r.depth.unwrap_or(DepthImage::INVALID)
    })?;
    DepthImage::from_pixels(k.width, k.height, pixels)
}

// ---------------------------------------------------------------------------
// LiDAR
// ---------------------------------------------------------------------------

/// Spinning LiDAR model: `channels` beams spread evenly (endpoint-inclusive)
/// over the vertical FoV, `azimuth_count` rays per revolution spaced exactly
/// 2*pi/N apart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LidarSpec {
    pub channels: u32,
    /// Elevation limits in degrees, negative = below horizontal.
    pub vfov_min_deg: f64,
    pub vfov_max_deg: f64,
    /// Rays per full revolution.
    pub azimuth_count: u32,
    pub max_range: f64,
    /// Minimum accumulated opacity for a return.
    pub opacity_threshold: f64,
}

impl Default for LidarSpec {
    fn default() -> Self {
        Self {
            channels: 16,
            vfov_min_deg: -15.0,
            vfov_max_deg: 15.0,
            azimuth_count: 1024,
            max_range: 30.0,
            opacity_threshold: 0.5,
        }
    }
}

impl LidarSpec {
    pub fn validate(&self) -> Result<(), RenderError> {
        if self.channels < 1 {
            return Err(RenderError::InvalidLidarSpec("channels must be >= 1".into()));
        }
        if !(self.vfov_min_deg < self.vfov_max_deg) {
            return Err(RenderError::InvalidLidarSpec(format!(
                "vfov_min ({}) must be below vfov_max ({})",
                self.vfov_min_deg, self.vfov_max_deg
            )));
        }
        if self.azimuth_count < 1 {
            return Err(RenderError::InvalidLidarSpec("azimuth_count must be >= 1".into()));
        }
        if !(self.max_range > 0.0) {
            return Err(RenderError::InvalidLidarSpec("max_range must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.opacity_threshold) {
            return Err(RenderError::InvalidLidarSpec("opacity_threshold must be in [0, 1]".into()));
        }
        Ok(())
    }

    /// Beam elevations in degrees, endpoint-inclusive. A single channel
    /// shoots along the middle of the FoV.
    pub fn beam_elevations_deg(&self) -> Vec<f64> {
        if self.channels == 1 {
            return vec![0.5 * (self.vfov_min_deg + self.vfov_max_deg)];
        }
        let step = (self.vfov_max_deg - self.vfov_min_deg) / (self.channels - 1) as f64;
        (0..self.channels).map(|k| self.vfov_min_deg + k as f64 * step).collect()
    }
}

/// Sensor-frame beam direction from horizontal angle `theta` (sweeping the
/// full circle) and polar angle `phi` measured from +z:
/// `(cos(theta) sin(phi), sin(theta) sin(phi), cos(phi))`.
pub fn lidar_direction(theta: f64, phi: f64) -> Vec3 {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Vec3::new(ct * sp, st * sp, cp)
}

/// One LiDAR return.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LidarPoint {
    pub position: Vec3,
    pub beam: u32,
    pub azimuth: u32,
    pub range: f64,
}

/// LiDAR sweep output, ordered by (beam, azimuth).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub points: Vec<LidarPoint>,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Render a full revolution of the LiDAR. A beam produces a return when its
/// ray accumulates at least `opacity_threshold` and its expected range does
/// not exceed `max_range`. User-facing elevation maps to the polar angle as
/// `phi = pi/2 - elevation`.
pub fn render_lidar<F: RadianceField + ?Sized>(
    spec: &LidarSpec,
    sensor_pose: &Pose,
    field: &F,
    sampling: &RaySampling,
) -> Result<PointCloud, RenderError> {
    spec.validate()?;
    if sampling.count == 0 {
        return Err(RenderError::ZeroSamples);
    }
    let elevations = spec.beam_elevations_deg();
    let origin = sensor_pose.translation();
    let beams: Vec<Result<Vec<LidarPoint>, RenderError>> = (0..spec.channels)
        .into_par_iter()
        .map(|beam| {
            let phi = std::f64::consts::FRAC_PI_2 - elevations[beam as usize].to_radians();
            let mut points = Vec::new();
            for az in 0..spec.azimuth_count {
                let theta = 2.0 * std::f64::consts::PI * az as f64 / spec.azimuth_count as f64;
                let dir_world = sensor_pose.rotate(&lidar_direction(theta, phi));
                let ray = Ray::new(origin, dir_world, 0.0, spec.max_range)?;
                let per_ray = sampling.reseeded(&[beam as u64, az as u64]);
                let radiance = composite_ray(&ray, field, &per_ray)?;
                if radiance.opacity >= spec.opacity_threshold {
                    if let Some(range) = radiance.depth {
                        if range <= spec.max_range {
                            points.push(LidarPoint {
                                position: origin + dir_world * range,
                                beam,
                                azimuth: az,
                                range,
                            });
                        }
                    }
                }
            }
            Ok(points)
        })
        .collect();
    let mut cloud = PointCloud::default();
    for beam in beams {
        cloud.points.extend(beam?);
    }
    Ok(cloud)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{AnalyticField, Primitive};
    use crate::geometry::Aabb;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn homogeneous_red(sigma: f64, half: f64) -> AnalyticField {
        let bbox = Aabb::new(Vec3::repeat(-half), Vec3::repeat(half)).unwrap();
        AnalyticField::new(
            bbox,
            vec![Primitive::Box {
                min: bbox.min,
                max: bbox.max,
                color: Vec3::new(1.0, 0.0, 0.0),
                density: sigma,
            }],
        )
        .unwrap()
    }

    fn empty_field() -> AnalyticField {
        let bbox = Aabb::new(Vec3::repeat(-10.0), Vec3::repeat(10.0)).unwrap();
        AnalyticField::new(bbox, vec![]).unwrap()
    }

    fn z_ray(t_far: f64) -> Ray {
        Ray::new(Vec3::zeros(), Vec3::z(), 0.0, t_far).unwrap()
    }

    #[test]
    fn empty_scene_renders_black_and_invalid() {
        let r = composite_ray(&z_ray(5.0), &empty_field(), &RaySampling::uniform(64)).unwrap();
        assert_eq!(r.color, Vec3::zeros());
        assert_eq!(r.opacity, 0.0);
        assert_eq!(r.depth, None);
    }

    #[test]
    fn single_segment_closed_form() {
        // One segment, sigma = ln 2, delta = 1: alpha = 0.5, T = 1.
        let sample = RadianceSample::new(Vec3::new(1.0, 1.0, 1.0), std::f64::consts::LN_2);
        let r = composite_segments([(1.0, 1.0, sample)]);
        assert_relative_eq!(r.color, Vec3::repeat(0.5), epsilon = 1e-12);
        assert_relative_eq!(r.opacity, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn zero_samples_is_an_error() {
        let sampling = RaySampling::uniform(0);
        assert!(matches!(
            composite_ray(&z_ray(1.0), &empty_field(), &sampling),
            Err(RenderError::ZeroSamples)
        ));
    }

    #[test]
    fn homogeneous_medium_matches_closed_form() {
        // sigma = 1 over [0, 2]: opacity -> 1 - e^-2, all of it red.
        let field = homogeneous_red(1.0, 5.0);
        let expected = 1.0 - (-2.0f64).exp();
        let r = composite_ray(&z_ray(2.0), &field, &RaySampling::uniform(512)).unwrap();
        assert!((r.color.x - expected).abs() < 2e-3);
        assert!((r.opacity - expected).abs() < 2e-3);
        assert_eq!(r.color.y, 0.0);
    }

    #[test]
    fn refinement_reduces_error_monotonically() {
        let field = homogeneous_red(1.0, 5.0);
        let expected = 1.0 - (-2.0f64).exp();
        let mut last = f64::INFINITY;
        for n in [512, 1024, 2048] {
            let r = composite_ray(&z_ray(2.0), &field, &RaySampling::uniform(n)).unwrap();
            let err = (r.opacity - expected).abs();
            assert!(err < last, "error did not shrink at N={n}: {err} >= {last}");
            last = err;
        }
    }

    /// Independent oracle for the expected depth of a homogeneous medium:
    /// trapezoid quadrature of int t * sigma e^(-sigma t) dt normalized by
    /// int sigma e^(-sigma t) dt over [0, t_far].
    fn expected_depth_quadrature(sigma: f64, t_far: f64, steps: usize) -> f64 {
        let h = t_far / steps as f64;
        let weight = |t: f64| sigma * (-sigma * t).exp();
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..=steps {
            let t = i as f64 * h;
            let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
            num += w * t * weight(t);
            den += w * weight(t);
        }
        num / den
    }

    #[test]
    fn expected_depth_matches_quadrature_oracle() {
        let oracle = expected_depth_quadrature(1.0, 8.0, 1_000_000);
        // Closed form (1 - 9e^-8) / (1 - e^-8), frozen to guard the oracle.
        assert_relative_eq!(oracle, 0.997_315_514_5, epsilon = 1e-6);
        let field = homogeneous_red(1.0, 10.0);
        let r = composite_ray(&z_ray(8.0), &field, &RaySampling::uniform(4096)).unwrap();
        let depth = r.depth.expect("opaque ray must have valid depth");
        assert!((depth - oracle).abs() < 2e-3, "depth {depth} vs oracle {oracle}");
    }

    #[test]
    fn depth_requires_opacity_floor() {
        // Thin medium: opacity well below the floor -> no depth.
        let field = homogeneous_red(0.001, 5.0);
        let r = composite_ray(&z_ray(2.0), &field, &RaySampling::uniform(64)).unwrap();
        assert!(r.opacity < DEPTH_OPACITY_FLOOR);
        assert_eq!(r.depth, None);
    }

    #[test]
    fn stratified_sampling_is_reproducible_and_jittered() {
        let ray = z_ray(4.0);
        let a = sample_distances(&ray, &RaySampling::stratified(128, 7)).unwrap();
        let b = sample_distances(&ray, &RaySampling::stratified(128, 7)).unwrap();
        let c = sample_distances(&ray, &RaySampling::stratified(128, 8)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        // Strictly increasing, inside (t_near, t_far], one per stratum.
        for (i, w) in a.windows(2).enumerate() {
            assert!(w[0] < w[1], "not increasing at {i}");
        }
        assert!(a[0] > ray.t_near && a[a.len() - 1] <= ray.t_far);
    }

    #[test]
    fn camera_render_decomposes_into_rays() {
        let field = homogeneous_red(0.5, 5.0);
        let k = CameraIntrinsics::new(2.0, 2.0, 1.0, 1.0, 2, 2).unwrap();
        let pose = Pose::identity();
        let sampling = RaySampling::stratified(32, 99);
        let img = render_camera(&k, &pose, &field, &sampling, 0.1, 6.0).unwrap();
        for v in 0..2 {
            for u in 0..2 {
                let ray = pixel_ray(u, v, &k, &pose, 0.1, 6.0).unwrap();
                let per_pixel = sampling.reseeded(&[u as u64, v as u64]);
                let r = composite_ray(&ray, &field, &per_pixel).unwrap();
                assert_eq!(img.pixel(u, v), r.color, "pixel ({u},{v}) mismatch");
            }
        }
    }

    #[test]
    fn saturated_box_fills_frame_red() {
        let field = homogeneous_red(50.0, 5.0);
        let k = CameraIntrinsics::new(16.0, 16.0, 8.0, 8.0, 16, 16).unwrap();
        let img =
            render_camera(&k, &Pose::identity(), &field, &RaySampling::uniform(256), 0.1, 8.0)
                .unwrap();
        for p in img.pixels() {
            assert!((p.x - 1.0).abs() < 1e-2 && p.y < 1e-2 && p.z < 1e-2, "pixel {p:?}");
        }
    }

    #[test]
    fn empty_scene_depth_is_all_invalid() {
        let k = CameraIntrinsics::new(8.0, 8.0, 4.0, 4.0, 8, 8).unwrap();
        let img =
            render_depth(&k, &Pose::identity(), &empty_field(), &RaySampling::uniform(16), 0.1, 5.0)
                .unwrap();
        assert!(img.pixels().iter().all(|&d| d == DepthImage::INVALID));
    }

    #[test]
    fn fronto_parallel_plane_depth_grows_off_axis() {
        // Thin dense slab at z = 2.
        let bbox = Aabb::new(Vec3::repeat(-10.0), Vec3::repeat(10.0)).unwrap();
        let field = AnalyticField::new(
            bbox,
            vec![Primitive::Box {
                min: Vec3::new(-10.0, -10.0, 2.0),
                max: Vec3::new(10.0, 10.0, 2.05),
                color: Vec3::new(0.5, 0.5, 0.5),
                density: 1e3,
            }],
        )
        .unwrap();
        let k = CameraIntrinsics::new(32.0, 32.0, 16.5, 16.5, 33, 33).unwrap();
        let img =
            render_depth(&k, &Pose::identity(), &field, &RaySampling::uniform(2048), 0.1, 6.0)
                .unwrap();
        let center = img.pixel(16, 16);
        assert!((center - 2.0).abs() < 0.02, "on-axis depth {center}");
        for (u, v) in [(0, 16), (32, 16), (16, 0), (0, 0)] {
            assert!(img.pixel(u, v) >= center - 1e-9, "off-axis pixel ({u},{v}) closer than center");
        }
    }

    #[test]
    fn lidar_direction_examples() {
        use std::f64::consts::FRAC_PI_2;
        assert_relative_eq!(lidar_direction(0.0, FRAC_PI_2), Vec3::new(1.0, 0.0, 0.0), epsilon = 1e-12);
        assert_relative_eq!(
            lidar_direction(FRAC_PI_2, FRAC_PI_2),
            Vec3::new(0.0, 1.0, 0.0),
            epsilon = 1e-12
        );
        assert_relative_eq!(lidar_direction(1.234, 0.0), Vec3::new(0.0, 0.0, 1.0), epsilon = 1e-12);
    }

    #[test]
    fn sixteen_beams_step_two_degrees() {
        let spec = LidarSpec::default();
        let elevations = spec.beam_elevations_deg();
        assert_eq!(elevations.len(), 16);
        for (k, e) in elevations.iter().enumerate() {
            assert_relative_eq!(*e, -15.0 + 2.0 * k as f64, epsilon = 1e-12);
        }
    }

    #[test]
    fn empty_field_yields_no_lidar_points() {
        let spec = LidarSpec { azimuth_count: 32, ..LidarSpec::default() };
        let cloud =
            render_lidar(&spec, &Pose::identity(), &empty_field(), &RaySampling::uniform(64))
                .unwrap();
        assert!(cloud.is_empty());
    }

    #[test]
    fn lidar_spec_validation() {
        let bad = LidarSpec { channels: 0, ..LidarSpec::default() };
        assert!(bad.validate().is_err());
        let bad = LidarSpec { vfov_min_deg: 10.0, vfov_max_deg: -10.0, ..LidarSpec::default() };
        assert!(bad.validate().is_err());
    }

    proptest! {
        // Telescoping identity: sum of weights plus remaining transmittance
        // is exactly 1 (to rounding), for arbitrary density profiles.
        #[test]
        fn opacity_identity(
            sigmas in proptest::collection::vec(0.0f64..50.0, 1..64),
            deltas in proptest::collection::vec(1e-4f64..0.5, 64),
        ) {
            let mut walk = TransmittanceWalk::new();
            let mut weight_sum = 0.0;
            let mut last_t = 1.0;
            for (i, &sigma) in sigmas.iter().enumerate() {
                let seg = walk.step(sigma, deltas[i]);
                prop_assert!((0.0..=1.0).contains(&seg.alpha));
                prop_assert!(seg.transmittance <= last_t + 1e-15);
                last_t = seg.transmittance;
                weight_sum += seg.weight;
            }
            prop_assert!((weight_sum + walk.remaining() - 1.0).abs() < 1e-9);
        }

        // Composited colors stay in [0,1]; depth stays within ray bounds.
        #[test]
        fn outputs_stay_bounded(
            seed in 0u64..1000,
            n in 1usize..128,
            sigma in 0.0f64..20.0,
        ) {
            let field = homogeneous_red(sigma, 5.0);
            let ray = z_ray(4.0);
            let r = composite_ray(&ray, &field, &RaySampling::stratified(n, seed)).unwrap();
            for c in r.color.iter() {
                prop_assert!((0.0..=1.0).contains(c));
            }
            prop_assert!((0.0..=1.0 + 1e-12).contains(&r.opacity));
            if let Some(d) = r.depth {
                prop_assert!(d >= ray.t_near && d <= ray.t_far);
            }
        }
    }
}
