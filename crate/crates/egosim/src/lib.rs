//! Ego-centric multi-sensor robot simulation over composited volumetric
//! radiance fields.
//!
//! The crate renders RGB, depth, and LiDAR streams from the point of view of
//! a robot moving through a world made of two kinds of radiance field: a
//! static scene field (analytic primitives or a trainable dense voxel grid)
//! and articulated human bodies driven by a social-force crowd model. All
//! fields share one world frame, so a single ray march composites everything
//! a sensor can see.
//!
//! The high-level flow mirrors the `egosim` CLI subcommands:
//!
//! 1. [`field`] describes scenes; [`fit`] trains a voxel grid from posed
//!    images rendered out of an analytic oracle scene.
//! 2. [`crowd`] moves pedestrians; [`humanfield`] turns each agent into a
//!    posed capsule body evaluable as a radiance field.
//! 3. [`world`] composites scene and humans, culls humans per sensor, and
//!    captures per-tick sensor frames along a scripted trajectory.
//! 4. [`metrics`] scores rendered output against references (PSNR, SSIM,
//!    depth error, trajectory error).
//!
//! Everything is deterministic: one run seed flows through counter-based
//! per-ray RNG streams, so identical configs produce byte-identical output
//! files regardless of thread count.

pub mod cli;
pub mod crowd;
pub mod field;
pub mod fit;
pub mod geometry;
pub mod humanfield;
pub mod io;
pub mod metrics;
pub mod render;
pub mod rng;
pub mod world;

pub use geometry::{CameraIntrinsics, Pose, Ray};
pub use field::{AnalyticField, RadianceField, RadianceSample, VoxelGridField};
pub use render::{RaySampling, SamplingStrategy};

// Book chapters double as doctests so the guide can never drift from the
// API it documents (`cargo test --doc`).
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!(concat!("../../../book/src/", $path))]
            mod $name {}
        };
    }

    chapter!(introduction, "introduction.md");
    chapter!(getting_started, "getting-started.md");
    chapter!(geometry, "geometry.md");
    chapter!(radiance_fields, "radiance-fields.md");
    chapter!(volume_rendering, "volume-rendering.md");
    chapter!(sensors, "sensors.md");
    chapter!(training, "training.md");
    chapter!(crowd, "crowd.md");
    chapter!(humans, "humans.md");
    chapter!(world, "world.md");
    chapter!(metrics, "metrics.md");
    chapter!(file_formats, "file-formats.md");
}
