//! Radiance field representations.
//!
//! A radiance field maps a world point and viewing direction to an emitted
//! color and a volume density (differential opacity per meter). Two
//! implementations ship here: [`AnalyticField`], a closed-form scene built
//! from constant-density primitives that serves as the ground-truth oracle
//! for rendering and training tests, and [`VoxelGridField`], a trainable
//! dense grid of raw parameters.
//!
//! Both are Lambertian: the view direction is part of the query interface so
//! a view-dependent field can slot in later, but these two ignore it.

use crate::geometry::{Aabb, Vec3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("scene config parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid scene config: {0}")]
    Validation(String),
    #[error("field query with non-finite input")]
    NonFiniteInput,
    #[error("voxel grid resolution must be at least 2 per axis, got {0}x{1}x{2}")]
    BadResolution(usize, usize, usize),
    #[error("parameter buffer has {got} values, expected {expected}")]
    BadParamCount { got: usize, expected: usize },
}

/// The (color, density) pair returned by any field query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadianceSample {
    /// Linear RGB, each channel in [0, 1].
    pub color: Vec3,
    /// Volume density, 1/meter, non-negative.
    pub density: f64,
}

impl RadianceSample {
    pub const EMPTY: RadianceSample =
        RadianceSample { color: Vec3::new(0.0, 0.0, 0.0), density: 0.0 };

    pub fn new(color: Vec3, density: f64) -> Self {
        Self { color, density }
    }
}

/// Anything a ray marcher can sample. Fields are read-only during rendering
/// and must tolerate concurrent queries.
pub trait RadianceField: Send + Sync {
    /// Sample the field at world point `x` viewed along unit direction `dir`.
    fn sample(&self, x: &Vec3, dir: &Vec3) -> RadianceSample;
}

/// Checked field query: rejects non-finite inputs, then defers to
/// [`RadianceField::sample`].
pub fn eval_field(
    field: &dyn RadianceField,
    x: &Vec3,
    dir: &Vec3,
) -> Result<RadianceSample, FieldError> {
    if !x.iter().chain(dir.iter()).all(|c| c.is_finite()) {
        return Err(FieldError::NonFiniteInput);
    }
    Ok(field.sample(x, dir))
}

/// Numerically stable softplus, ln(1 + e^x). Maps raw density parameters to
/// non-negative activated densities.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Inverse of [`softplus`] for y > 0: ln(e^y - 1).
pub fn softplus_inv(y: f64) -> f64 {
    debug_assert!(y > 0.0);
    if y > 30.0 {
        y
    } else {
        (y.exp() - 1.0).ln()
    }
}

/// Logistic function, maps raw color parameters into (0, 1).
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

// ---------------------------------------------------------------------------
// Analytic scenes
// ---------------------------------------------------------------------------

/// Constant-color, constant-density primitive.
#[derive(Debug, Clone, PartialEq)]
pub enum Primitive {
    Sphere { center: Vec3, radius: f64, color: Vec3, density: f64 },
    Box { min: Vec3, max: Vec3, color: Vec3, density: f64 },
}

impl Primitive {
    fn contains(&self, p: &Vec3) -> bool {
        match self {
            Primitive::Sphere { center, radius, .. } => {
                (p - center).norm_squared() <= radius * radius
            }
            Primitive::Box { min, max, .. } => {
                p.x >= min.x
                    && p.x <= max.x
                    && p.y >= min.y
                    && p.y <= max.y
                    && p.z >= min.z
                    && p.z <= max.z
            }
        }
    }

    fn sample(&self) -> RadianceSample {
        match self {
            Primitive::Sphere { color, density, .. } | Primitive::Box { color, density, .. } => {
                RadianceSample::new(*color, *density)
            }
        }
    }

    fn extent(&self) -> Aabb {
        match self {
            Primitive::Sphere { center, radius, .. } => Aabb {
                min: center - Vec3::repeat(*radius),
                max: center + Vec3::repeat(*radius),
            },
            Primitive::Box { min, max, .. } => Aabb { min: *min, max: *max },
        }
    }

    fn color(&self) -> Vec3 {
        match self {
            Primitive::Sphere { color, .. } | Primitive::Box { color, .. } => *color,
        }
    }

    fn density(&self) -> f64 {
        match self {
            Primitive::Sphere { density, .. } | Primitive::Box { density, .. } => *density,
        }
    }
}

/// Closed-form scene: a list of primitives inside a world bounding box, with
/// ambient density zero. Where primitives overlap, the LAST one listed wins,
/// so later entries can carve holes (e.g. a zero-density inner sphere turns
/// an opaque ball into a shell).
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticField {
    bbox: Aabb,
    primitives: Vec<Primitive>,
}

impl AnalyticField {
    pub fn new(bbox: Aabb, primitives: Vec<Primitive>) -> Result<Self, FieldError> {
        for (i, prim) in primitives.iter().enumerate() {
            if prim.density() < 0.0 || !prim.density().is_finite() {
                return Err(FieldError::Validation(format!(
                    "primitive {i}: density must be finite and non-negative"
                )));
            }
            if !prim.color().iter().all(|c| (0.0..=1.0).contains(c)) {
                return Err(FieldError::Validation(format!(
                    "primitive {i}: color channels must lie in [0, 1]"
                )));
            }
            if let Primitive::Sphere { radius, .. } = prim {
                if !(*radius > 0.0) {
                    return Err(FieldError::Validation(format!(
                        "primitive {i}: sphere radius must be positive"
                    )));
                }
            }
            if let Primitive::Box { min, max, .. } = prim {
                if !(min.x <= max.x && min.y <= max.y && min.z <= max.z) {
                    return Err(FieldError::Validation(format!("primitive {i}: box min exceeds max")));
                }
            }
            let ext = prim.extent();
            if !bbox.contains_aabb(&ext) {
                return Err(FieldError::Validation(format!(
                    "primitive {i} extends outside the declared scene bbox"
                )));
            }
        }
        Ok(Self { bbox, primitives })
    }

    pub fn bbox(&self) -> Aabb {
        self.bbox
    }

    pub fn primitives(&self) -> &[Primitive] {
        &self.primitives
    }

    pub fn to_config(&self) -> SceneConfig {
        SceneConfig {
            bbox: BoxConfig { min: self.bbox.min.into(), max: self.bbox.max.into() },
            primitives: self
                .primitives
                .iter()
                .map(|p| match p {
                    Primitive::Sphere { center, radius, color, density } => {
                        PrimitiveConfig::Sphere {
                            center: (*center).into(),
                            radius: *radius,
                            color: (*color).into(),
                            density: *density,
                        }
                    }
                    Primitive::Box { min, max, color, density } => PrimitiveConfig::Box {
                        min: (*min).into(),
                        max: (*max).into(),
                        color: (*color).into(),
                        density: *density,
                    },
                })
                .collect(),
        }
    }
}

impl RadianceField for AnalyticField {
    fn sample(&self, x: &Vec3, _dir: &Vec3) -> RadianceSample {
        // Last match wins; scan back to front.
        for prim in self.primitives.iter().rev() {
            if prim.contains(x) {
                return prim.sample();
            }
        }
        RadianceSample::EMPTY
    }
}

/// JSON-shaped scene description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub bbox: BoxConfig,
    pub primitives: Vec<PrimitiveConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxConfig {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PrimitiveConfig {
    Sphere { center: [f64; 3], radius: f64, color: [f64; 3], density: f64 },
    Box { min: [f64; 3], max: [f64; 3], color: [f64; 3], density: f64 },
}

impl SceneConfig {
    pub fn from_json(text: &str) -> Result<Self, FieldError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_field(&self) -> Result<AnalyticField, FieldError> {
        let bbox = Aabb::new(Vec3::from(self.bbox.min), Vec3::from(self.bbox.max))
            .map_err(|e| FieldError::Validation(e.to_string()))?;
        let primitives = self
            .primitives
            .iter()
            .map(|p| match p {
                PrimitiveConfig::Sphere { center, radius, color, density } => Primitive::Sphere {
                    center: Vec3::from(*center),
                    radius: *radius,
                    color: Vec3::from(*color),
                    density: *density,
                },
                PrimitiveConfig::Box { min, max, color, density } => Primitive::Box {
                    min: Vec3::from(*min),
                    max: Vec3::from(*max),
                    color: Vec3::from(*color),
                    density: *density,
                },
            })
            .collect();
        AnalyticField::new(bbox, primitives)
    }
}

/// Parse a JSON scene config into an analytic field. Parse errors carry
/// serde's line/column diagnostics.
pub fn make_synthetic_scene(json: &str) -> Result<AnalyticField, FieldError> {
    SceneConfig::from_json(json)?.to_field()
}

// ---------------------------------------------------------------------------
// Trainable voxel grid
// ---------------------------------------------------------------------------

/// Raw parameters per grid vertex: three color logits and one density
/// pre-activation, in this order.
pub const PARAMS_PER_VERTEX: usize = 4;

/// Trainable dense voxel grid over an axis-aligned bounding box.
///
/// `resolution` counts vertices per axis (so `resolution = [n, n, n]` gives
/// `(n-1)^3` cells). Vertices are stored x-fastest; each holds
/// [`PARAMS_PER_VERTEX`] raw values activated as `color = logistic(raw)` and
/// `density = softplus(raw)`. Queries trilinearly interpolate the ACTIVATED
/// vertex values, so interpolated colors stay in (0, 1) and densities stay
/// non-negative by construction. Queries outside the bbox return zero
/// density: the grid represents an open scene, not a clamped one.
///
/// Activated values (and the density activation slope used by training) are
/// cached and refreshed whenever the raw parameters change, which keeps the
/// per-sample query free of transcendental calls.
#[derive(Debug, Clone)]
pub struct VoxelGridField {
    bbox: Aabb,
    resolution: [usize; 3],
    raw: Vec<f64>,
    activated: Vec<f64>,
    /// d(softplus)/d(raw) per vertex, i.e. logistic(raw_density).
    density_slope: Vec<f64>,
}

/// Raw density initialization: softplus(raw) = 0.01, a near-empty prior that
/// lets training carve free space quickly.
pub const INIT_DENSITY: f64 = 0.01;

impl VoxelGridField {
    /// Fresh grid with the near-empty prior: raw colors 0 (mid-gray) and raw
    /// densities softplus^-1(0.01).
    pub fn new(bbox: Aabb, resolution: [usize; 3]) -> Result<Self, FieldError> {
        let n = Self::checked_vertex_count(resolution)?;
        let raw_density = softplus_inv(INIT_DENSITY);
        let mut raw = vec![0.0; n * PARAMS_PER_VERTEX];
        for v in 0..n {
            raw[v * PARAMS_PER_VERTEX + 3] = raw_density;
        }
        Ok(Self::from_raw_unchecked(bbox, resolution, raw))
    }

    /// Rebuild a grid from a raw parameter buffer (checkpoint loading).
    pub fn from_raw_params(
        bbox: Aabb,
        resolution: [usize; 3],
        raw: Vec<f64>,
    ) -> Result<Self, FieldError> {
        let n = Self::checked_vertex_count(resolution)?;
        if raw.len() != n * PARAMS_PER_VERTEX {
            return Err(FieldError::BadParamCount {
                got: raw.len(),
                expected: n * PARAMS_PER_VERTEX,
            });
        }
        Ok(Self::from_raw_unchecked(bbox, resolution, raw))
    }

    fn checked_vertex_count(resolution: [usize; 3]) -> Result<usize, FieldError> {
        let [nx, ny, nz] = resolution;
        if nx < 2 || ny < 2 || nz < 2 {
            return Err(FieldError::BadResolution(nx, ny, nz));
        }
        Ok(nx * ny * nz)
    }

    fn from_raw_unchecked(bbox: Aabb, resolution: [usize; 3], raw: Vec<f64>) -> Self {
        let mut field = Self {
            bbox,
            resolution,
            activated: vec![0.0; raw.len()],
            density_slope: vec![0.0; raw.len() / PARAMS_PER_VERTEX],
            raw,
        };
        field.refresh_activations();
        field
    }

    fn refresh_activations(&mut self) {
        for v in 0..self.vertex_count() {
            let base = v * PARAMS_PER_VERTEX;
            for c in 0..3 {
                self.activated[base + c] = logistic(self.raw[base + c]);
            }
            self.activated[base + 3] = softplus(self.raw[base + 3]);
            self.density_slope[v] = logistic(self.raw[base + 3]);
        }
    }

    pub fn bbox(&self) -> Aabb {
        self.bbox
    }

    pub fn resolution(&self) -> [usize; 3] {
        self.resolution
    }

    pub fn vertex_count(&self) -> usize {
        self.resolution[0] * self.resolution[1] * self.resolution[2]
    }

    pub fn param_count(&self) -> usize {
        self.raw.len()
    }

    pub fn raw_params(&self) -> &[f64] {
        &self.raw
    }

    /// Mutate the raw parameters and refresh the activation caches.
    /// Training applies its per-iteration update through here.
    pub fn update_raw(&mut self, f: impl FnOnce(&mut [f64])) {
        f(&mut self.raw);
        self.refresh_activations();
    }

    /// Activated vertex values, [r, g, b, density] per vertex.
    pub(crate) fn activated(&self) -> &[f64] {
        &self.activated
    }

    /// Density activation slope per vertex (for backprop).
    pub(crate) fn density_slope(&self) -> &[f64] {
        &self.density_slope
    }

    /// Flat vertex index for (ix, iy, iz), x-fastest.
    #[inline]
    fn vertex_index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (iz * self.resolution[1] + iy) * self.resolution[0] + ix
    }

    /// Trilinear support of a point: the 8 surrounding vertex indices and
    /// their interpolation weights. `None` outside the bbox.
    pub(crate) fn interp_support(&self, x: &Vec3) -> Option<([usize; 8], [f64; 8])> {
        if !self.bbox.contains(x) {
            return None;
        }
        let mut cell = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for axis in 0..3 {
            let n = self.resolution[axis];
            let span = self.bbox.max[axis] - self.bbox.min[axis];
            // A degenerate axis (zero extent) pins everything to vertex 0.
            let g = if span > 0.0 {
                (x[axis] - self.bbox.min[axis]) / span * (n - 1) as f64
            } else {
                0.0
            };
            let i = (g.floor() as usize).min(n - 2);
            cell[axis] = i;
            frac[axis] = (g - i as f64).clamp(0.0, 1.0);
        }
        let (ix, iy, iz) = (cell[0], cell[1], cell[2]);
        let (fx, fy, fz) = (frac[0], frac[1], frac[2]);
        let indices = [
            self.vertex_index(ix, iy, iz),
            self.vertex_index(ix + 1, iy, iz),
            self.vertex_index(ix, iy + 1, iz),
            self.vertex_index(ix + 1, iy + 1, iz),
            self.vertex_index(ix, iy, iz + 1),
            self.vertex_index(ix + 1, iy, iz + 1),
            self.vertex_index(ix, iy + 1, iz + 1),
            self.vertex_index(ix + 1, iy + 1, iz + 1),
        ];
        let weights = [
            (1.0 - fx) * (1.0 - fy) * (1.0 - fz),
            fx * (1.0 - fy) * (1.0 - fz),
            (1.0 - fx) * fy * (1.0 - fz),
            fx * fy * (1.0 - fz),
            (1.0 - fx) * (1.0 - fy) * fz,
            fx * (1.0 - fy) * fz,
            (1.0 - fx) * fy * fz,
            fx * fy * fz,
        ];
        Some((indices, weights))
    }
}

impl RadianceField for VoxelGridField {
    fn sample(&self, x: &Vec3, _dir: &Vec3) -> RadianceSample {
        let Some((indices, weights)) = self.interp_support(x) else {
            return RadianceSample::EMPTY;
        };
        let mut acc = [0.0f64; PARAMS_PER_VERTEX];
        for (idx, w) in indices.iter().zip(weights.iter()) {
            let base = idx * PARAMS_PER_VERTEX;
            for c in 0..PARAMS_PER_VERTEX {
                acc[c] += w * self.activated[base + c];
            }
        }
        RadianceSample::new(Vec3::new(acc[0], acc[1], acc[2]), acc[3])
    }
}
