//! Multi-light inverse rendering workbench.
//!
//! Renders procedural scenes under a fixed ring of point lights, recovers
//! per-pixel normals and metallic-roughness materials from those images with
//! photometric stereo followed by Levenberg-Marquardt refinement, simulates
//! generator artifacts through an augmentation suite, and scores results
//! with angular-error and image metrics.

pub mod augment;
pub mod brdf;
pub mod dataset;
pub mod camera;
pub mod error;
pub mod gbuffer;
pub mod image;
pub mod math;
pub mod metrics;
pub mod render;
pub mod rig;
pub mod rng;
pub mod solver;

pub use brdf::MaterialSample;
pub use camera::Camera;
pub use error::{Error, Result};
pub use gbuffer::{decode_normal, encode_normal, GBuffer, MultiLightSet};
pub use image::ImagePlane;
pub use rig::{light_position, light_rig_default, LightPose, LightRig};
pub use solver::{solve_gbuffer, SolverConfig, SolverReport};
