//! Rigid transforms, camera intrinsics, rays, and pinhole projection.
//!
//! Conventions used throughout the crate:
//!
//! * World frame: right-handed, z up, humans walk on the z = 0 plane.
//! * Camera frame: +z forward, +x right, +y down, matching image (u, v) axes
//!   so that projection is `u = fx * X / Z + cx`, `v = fy * Y / Z + cy`.
//! * Rays are cast through pixel centers, i.e. pixel (u, v) maps to the
//!   continuous image point (u + 0.5, v + 0.5).

use nalgebra::{Quaternion, UnitQuaternion, Vector2, Vector3};
use thiserror::Error;

pub type Vec2 = Vector2<f64>;
pub type Vec3 = Vector3<f64>;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("quaternion ({0}, {1}, {2}, {3}) cannot be normalized")]
    InvalidQuaternion(f64, f64, f64, f64),
    #[error("invalid camera intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("invalid ray: {0}")]
    InvalidRay(String),
    #[error("pixel ({u}, {v}) outside {width}x{height} image")]
    PixelOutOfBounds { u: u32, v: u32, width: u32, height: u32 },
    #[error("invalid bounding box: min {min:?} exceeds max {max:?}")]
    InvalidAabb { min: [f64; 3], max: [f64; 3] },
    #[error("pose has non-finite components")]
    NonFinitePose,
}

/// Rigid transform: rotation followed by translation.
///
/// `apply(p) = R * p + t`. Composition reads right to left, so
/// `a.compose(&b)` maps points through `b` first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    rotation: UnitQuaternion<f64>,
    translation: Vec3,
}

impl Pose {
    /// Build from quaternion components in (w, x, y, z) order plus a
    /// translation. The quaternion is normalized; a zero or non-finite
    /// quaternion is rejected.
    pub fn new(w: f64, x: f64, y: f64, z: f64, translation: Vec3) -> Result<Self, GeometryError> {
        let q = Quaternion::new(w, x, y, z);
        if !q.coords.iter().all(|c| c.is_finite()) || q.norm() < 1e-12 {
            return Err(GeometryError::InvalidQuaternion(w, x, y, z));
        }
        if !translation.iter().all(|c| c.is_finite()) {
            return Err(GeometryError::NonFinitePose);
        }
        Ok(Self { rotation: UnitQuaternion::from_quaternion(q), translation })
    }

    pub fn identity() -> Self {
        Self { rotation: UnitQuaternion::identity(), translation: Vec3::zeros() }
    }

    pub fn from_parts(rotation: UnitQuaternion<f64>, translation: Vec3) -> Self {
        Self { rotation, translation }
    }

    /// Translation-only pose.
    pub fn from_translation(translation: Vec3) -> Self {
        Self { rotation: UnitQuaternion::identity(), translation }
    }

    /// Rotation about the world z axis, as used for agent headings.
    pub fn from_yaw(yaw: f64, translation: Vec3) -> Self {
        Self { rotation: UnitQuaternion::from_axis_angle(&Vec3::z_axis(), yaw), translation }
    }

    pub fn rotation(&self) -> &UnitQuaternion<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> Vec3 {
        self.translation
    }

    /// Quaternion components in (w, x, y, z) order.
    pub fn quaternion_wxyz(&self) -> [f64; 4] {
        let q = self.rotation.quaternion();
        [q.w, q.i, q.j, q.k]
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    /// Rotate a direction vector (no translation).
    pub fn rotate(&self, v: &Vec3) -> Vec3 {
        self.rotation * v
    }

    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Pose {
        let inv_rot = self.rotation.inverse();
        Pose { rotation: inv_rot, translation: -(inv_rot * self.translation) }
    }

    /// Interpolate between two poses: linear in translation, spherical-linear
    /// in rotation. `s` is clamped to [0, 1].
    pub fn interpolate(&self, other: &Pose, s: f64) -> Pose {
        let s = s.clamp(0.0, 1.0);
        let rotation = self
            .rotation
            .try_slerp(&other.rotation, s, 1e-12)
            .unwrap_or(if s < 0.5 { self.rotation } else { other.rotation });
        Pose { rotation, translation: self.translation.lerp(&other.translation, s) }
    }
}

/// Pinhole camera intrinsics in pixel units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraIntrinsics {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: u32,
        height: u32,
    ) -> Result<Self, GeometryError> {
        if !(fx > 0.0) || !(fy > 0.0) {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "focal lengths must be positive, got fx={fx} fy={fy}"
            )));
        }
        if width == 0 || height == 0 {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "image dimensions must be at least 1x1, got {width}x{height}"
            )));
        }
        if ![fx, fy, cx, cy].iter().all(|v| v.is_finite()) {
            return Err(GeometryError::InvalidIntrinsics("non-finite parameter".into()));
        }
        Ok(Self { fx, fy, cx, cy, width, height })
    }
}

/// Result of projecting a camera-frame point onto the image plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub u: f64,
    pub v: f64,
    /// Camera-frame depth (Z), meters.
    pub depth: f64,
}

/// Pinhole projection of a camera-frame point. Points with Z <= 0 lie on or
/// behind the image plane and must never count as visible, so they project
/// to `None` rather than to mirrored coordinates.
pub fn project(point_cam: &Vec3, k: &CameraIntrinsics) -> Option<Projection> {
    let z = point_cam.z;
    if z <= 0.0 || !z.is_finite() {
        return None;
    }
    Some(Projection {
        u: k.fx * point_cam.x / z + k.cx,
        v: k.fy * point_cam.y / z + k.cy,
        depth: z,
    })
}

/// Half-open ray segment with a unit direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub direction: Vec3,
    pub t_near: f64,
    pub t_far: f64,
}

impl Ray {
    /// Build a ray, normalizing `direction`. Requires finite components,
    /// a non-degenerate direction, and `0 <= t_near < t_far`.
    pub fn new(origin: Vec3, direction: Vec3, t_near: f64, t_far: f64) -> Result<Self, GeometryError> {
        if !origin.iter().chain(direction.iter()).all(|c| c.is_finite()) {
            return Err(GeometryError::InvalidRay("non-finite origin or direction".into()));
        }
        let norm = direction.norm();
        if norm < 1e-12 {
            return Err(GeometryError::InvalidRay("zero-length direction".into()));
        }
        if !(t_near >= 0.0 && t_near < t_far && t_far.is_finite()) {
            return Err(GeometryError::InvalidRay(format!(
                "need 0 <= t_near < t_far, got [{t_near}, {t_far}]"
            )));
        }
        Ok(Self { origin, direction: direction / norm, t_near, t_far })
    }

    pub fn point_at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }
}

/// World ray through the center of pixel (u, v).
pub fn pixel_ray(
    u: u32,
    v: u32,
    k: &CameraIntrinsics,
    cam_pose: &Pose,
    t_near: f64,
    t_far: f64,
) -> Result<Ray, GeometryError> {
    if u >= k.width || v >= k.height {
        return Err(GeometryError::PixelOutOfBounds { u, v, width: k.width, height: k.height });
    }
    let dir_cam = Vec3::new(
        (u as f64 + 0.5 - k.cx) / k.fx,
        (v as f64 + 0.5 - k.cy) / k.fy,
        1.0,
    );
    Ray::new(cam_pose.translation(), cam_pose.rotate(&dir_cam), t_near, t_far)
}

/// Axis-aligned box, closed on all faces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Result<Self, GeometryError> {
        if !(min.x <= max.x && min.y <= max.y && min.z <= max.z)
            || !min.iter().chain(max.iter()).all(|c| c.is_finite())
        {
            return Err(GeometryError::InvalidAabb { min: min.into(), max: max.into() });
        }
        Ok(Self { min, max })
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        p.x >= self.min.x
            && p.x <= self.max.x
            && p.y >= self.min.y
            && p.y <= self.max.y
            && p.z >= self.min.z
            && p.z <= self.max.z
    }

    pub fn contains_aabb(&self, other: &Aabb) -> bool {
        self.contains(&other.min) && self.contains(&other.max)
    }

    pub fn corners(&self) -> [Vec3; 8] {
        let (a, b) = (self.min, self.max);
        [
            Vec3::new(a.x, a.y, a.z),
            Vec3::new(b.x, a.y, a.z),
            Vec3::new(a.x, b.y, a.z),
            Vec3::new(b.x, b.y, a.z),
            Vec3::new(a.x, a.y, b.z),
            Vec3::new(b.x, a.y, b.z),
            Vec3::new(a.x, b.y, b.z),
            Vec3::new(b.x, b.y, b.z),
        ]
    }

    /// Smallest box containing all points. `None` for an empty slice.
    pub fn from_points(points: &[Vec3]) -> Option<Self> {
        let first = points.first()?;
        let mut min = *first;
        let mut max = *first;
        for p in &points[1..] {
            min = min.inf(p);
            max = max.sup(p);
        }
        Some(Self { min, max })
    }

    /// True when any point of the box lies within `radius` of `center`.
    pub fn intersects_sphere(&self, center: &Vec3, radius: f64) -> bool {
        let closest = Vec3::new(
            center.x.clamp(self.min.x, self.max.x),
            center.y.clamp(self.min.y, self.max.y),
            center.z.clamp(self.min.z, self.max.z),
        );
        (closest - center).norm_squared() <= radius * radius
    }

    /// Slab test: parameter range where the ray is inside the box, or `None`.
    /// The range is clipped to `[t_min, t_max]`.
    pub fn intersect_ray(&self, origin: &Vec3, direction: &Vec3, t_min: f64, t_max: f64) -> Option<(f64, f64)> {
        let mut lo = t_min;
        let mut hi = t_max;
        for axis in 0..3 {
            let o = origin[axis];
            let d = direction[axis];
            if d.abs() < 1e-300 {
                if o < self.min[axis] || o > self.max[axis] {
                    return None;
                }
                continue;
            }
            let inv = 1.0 / d;
            let (t0, t1) = {
                let a = (self.min[axis] - o) * inv;
                let b = (self.max[axis] - o) * inv;
                if a <= b { (a, b) } else { (b, a) }
            };
            lo = lo.max(t0);
            hi = hi.min(t1);
            if lo > hi {
                return None;
            }
        }
        Some((lo, hi))
    }
}
