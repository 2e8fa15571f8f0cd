//! Forward rendering: scenes to G-buffers, point-light images and
//! environment relighting.

pub mod env;
pub mod scene;
pub mod trace;

pub use env::{relight_env, relight_env_split, EnvironmentMap};
pub use scene::{MaterialField, Primitive, Scene, Shape, SCENE_BOUND};
pub use trace::{
    raycast_gbuffer, render_multilight, render_pointlight, render_pointlight_gbuffer, render_view, sphere_trace,
};

use crate::image::ImagePlane;

/// sRGB transfer of a single linear value clamped to `[0, 1]`.
#[inline]
pub fn srgb_encode(linear: f64) -> f64 {
    let x = linear.clamp(0.0, 1.0);
    if x <= 0.003_130_8 {
        12.92 * x
    } else {
        1.055 * x.powf(1.0 / 2.4) - 0.055
    }
}

pub fn tonemap_srgb(linear: &ImagePlane) -> ImagePlane {
    linear.map(|v| srgb_encode(v as f64) as f32)
}
