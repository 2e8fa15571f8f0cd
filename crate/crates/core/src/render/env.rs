//! Equirectangular environment lighting and Monte-Carlo relighting of
//! G-buffers.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;

use crate::brdf::{eval_brdf, ggx_ndf};
use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::gbuffer::GBuffer;
use crate::image::ImagePlane;
use crate::math::{tangent_frame, vec3, Vec3};
use crate::render::trace::ShadingPoint;
use crate::rng::CounterRng;

/// Latitude-longitude radiance map; `u = 0.5 + atan2(x, -z) / 2π`,
/// `v = acos(y) / π`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentMap {
    image: ImagePlane,
}

impl EnvironmentMap {
    pub fn new(image: ImagePlane) -> Result<Self> {
        if image.channels() != 3 {
            return Err(Error::InvalidImage("environment map must have 3 channels".into()));
        }
        if image.width() != 2 * image.height() {
            return Err(Error::InvalidImage(format!(
                "environment map must be 2:1, got {}x{}",
                image.width(),
                image.height()
            )));
        }
        if image.data().iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidImage("negative radiance in environment map".into()));
        }
        Ok(Self { image })
    }

    pub fn uniform(height: usize, radiance: [f32; 3]) -> Self {
        Self {
            image: ImagePlane::filled(2 * height, height, &radiance),
        }
    }

    /// Procedural sky: zenith/horizon gradient, dim ground and a soft sun.
    pub fn sky(height: usize, sun_dir: Vec3, sun_strength: f64) -> Self {
        let sun = sun_dir.normalize();
        let w = 2 * height;
        let image = ImagePlane::from_fn(w, height, 3, |x, y| {
            let d = texel_direction(x, y, w, height);
            let rgb = if d.y >= 0.0 {
                let t = d.y.powf(0.5);
                [
                    0.9 * (1.0 - t) + 0.25 * t,
                    0.9 * (1.0 - t) + 0.45 * t,
                    0.95 * (1.0 - t) + 0.9 * t,
                ]
            } else {
                [0.25, 0.22, 0.2]
            };
            let glow = sun_strength * d.dot(&sun).max(0.0).powi(64);
            [
                (rgb[0] + glow) as f32,
                (rgb[1] + glow * 0.95) as f32,
                (rgb[2] + glow * 0.85) as f32,
            ]
        });
        Self { image }
    }

    pub fn image(&self) -> &ImagePlane {
        &self.image
    }

    /// Nearest-texel radiance in world direction `d`.
    pub fn lookup(&self, d: &Vec3) -> [f64; 3] {
        let (w, h) = (self.image.width(), self.image.height());
        let u = 0.5 + d.x.atan2(-d.z) / TAU;
        let v = d.y.clamp(-1.0, 1.0).acos() / PI;
        let x = ((u * w as f64).floor() as i64).rem_euclid(w as i64) as usize;
        let y = ((v * h as f64).floor() as usize).min(h - 1);
        let p = self.image.pixel(x, y);
        [p[0] as f64, p[1] as f64, p[2] as f64]
    }
}

/// Direction through the center of texel `(x, y)`.
fn texel_direction(x: usize, y: usize, w: usize, h: usize) -> Vec3 {
    let u = (x as f64 + 0.5) / w as f64;
    let v = (y as f64 + 0.5) / h as f64;
    let phi = (u - 0.5) * TAU;
    let theta = v * PI;
    // Inverts u = 0.5 + atan2(x, -z)/2π: x = sin φ, -z = cos φ.
    vec3(theta.sin() * phi.sin(), theta.cos(), -theta.sin() * phi.cos())
}

fn to_world(local: Vec3, n: &Vec3) -> Vec3 {
    let (t, b) = tangent_frame(n);
    t * local.x + b * local.y + n * local.z
}

fn cosine_sample(n: &Vec3, u1: f64, u2: f64) -> Vec3 {
    let r = u1.sqrt();
    let phi = TAU * u2;
    let z = (1.0 - u1).max(0.0).sqrt();
    to_world(vec3(r * phi.cos(), r * phi.sin(), z), n)
}

/// Samples a half vector proportional to `D(h)·(n·h)`.
fn ggx_half_sample(n: &Vec3, alpha: f64, u1: f64, u2: f64) -> Vec3 {
    let a2 = alpha * alpha;
    let cos_t = ((1.0 - u1) / (1.0 + (a2 - 1.0) * u1)).max(0.0).sqrt();
    let sin_t = (1.0 - cos_t * cos_t).max(0.0).sqrt();
    let phi = TAU * u2;
    to_world(vec3(sin_t * phi.cos(), sin_t * phi.sin(), cos_t), n)
}

/// Solid-angle density of `l` under reflected GGX half-vector sampling.
fn ggx_pdf(n: &Vec3, v: &Vec3, l: &Vec3, alpha: f64) -> f64 {
    let half = v + l;
    let len = half.norm();
    if len < 1e-12 {
        return 0.0;
    }
    let h = half / len;
    let n_dot_h = n.dot(&h);
    let v_dot_h = v.dot(&h);
    if n_dot_h <= 0.0 || v_dot_h <= 0.0 {
        return 0.0;
    }
    ggx_ndf(n_dot_h, alpha) * n_dot_h / (4.0 * v_dot_h)
}

/// Balance-heuristic MIS estimate at one pixel: one cosine sample and one
/// GGX sample per index. Returns (diffuse, specular) radiance.
fn integrate_pixel(
    sp: &ShadingPoint,
    mat: &crate::brdf::MaterialSample,
    env: &EnvironmentMap,
    spp: usize,
    seed: u64,
    x: usize,
    y: usize,
) -> ([f64; 3], [f64; 3]) {
    let n = &sp.normal;
    let v = &sp.view;
    let alpha = mat.alpha();
    let mut diffuse = [0.0; 3];
    let mut specular = [0.0; 3];
    let mut accumulate = |l: Vec3| {
        let n_dot_l = n.dot(&l);
        if n_dot_l <= 0.0 {
            return;
        }
        let pdf = n_dot_l / PI + ggx_pdf(n, v, &l, alpha);
        if pdf <= 0.0 {
            return;
        }
        let f = eval_brdf(n, v, &l, mat);
        let radiance = env.lookup(&l);
        let w = n_dot_l / pdf;
        for c in 0..3 {
            diffuse[c] += f.diffuse[c] * radiance[c] * w;
            specular[c] += f.specular[c] * radiance[c] * w;
        }
    };
    for s in 0..spp {
        let mut rng = CounterRng::new(seed, x as u64, y as u64, s as u64);
        let (u1, u2, u3, u4) = (rng.next_f64(), rng.next_f64(), rng.next_f64(), rng.next_f64());
        accumulate(cosine_sample(n, u1, u2));
        let h = ggx_half_sample(n, alpha, u3, u4);
        let v_dot_h = v.dot(&h);
        if v_dot_h > 0.0 {
            accumulate(h * (2.0 * v_dot_h) - v);
        }
    }
    let inv = 1.0 / spp as f64;
    (diffuse.map(|d| d * inv), specular.map(|s| s * inv))
}

/// Diffuse and specular images of a G-buffer lit by `env` (no
/// self-occlusion).
pub fn relight_env_split(
    gb: &GBuffer,
    camera: &Camera,
    env: &EnvironmentMap,
    samples_per_pixel: usize,
    seed: u64,
) -> Result<(ImagePlane, ImagePlane)> {
    if samples_per_pixel == 0 {
        return Err(Error::InvalidArgument("samples_per_pixel must be at least 1".into()));
    }
    let frame = camera.frame()?;
    if camera.width != gb.width() || camera.height != gb.height() {
        return Err(Error::DimensionMismatch("camera and G-buffer resolution differ".into()));
    }
    let w = gb.width();
    let pixels: Vec<([f64; 3], [f64; 3])> = (0..gb.pixel_count())
        .into_par_iter()
        .map(|i| {
            if !gb.is_foreground(i) {
                return ([0.0; 3], [0.0; 3]);
            }
            let (x, y) = (i % w, i / w);
            let n = &gb.normal.data()[i * 3..i * 3 + 3];
            let sp = ShadingPoint::from_stored(&frame, x, y, gb.depth.data()[i], [n[0], n[1], n[2]]);
            let alb = gb.albedo.rgb_at(i);
            let mat = crate::brdf::MaterialSample::new(alb, gb.roughness.scalar_at(i), gb.metallic.scalar_at(i));
            integrate_pixel(&sp, &mat, env, samples_per_pixel, seed, x, y)
        })
        .collect();
    let mut diffuse = ImagePlane::zeros(w, gb.height(), 3);
    let mut specular = ImagePlane::zeros(w, gb.height(), 3);
    for (i, (d, s)) in pixels.iter().enumerate() {
        for c in 0..3 {
            diffuse.data_mut()[i * 3 + c] = d[c] as f32;
            specular.data_mut()[i * 3 + c] = s[c] as f32;
        }
    }
    Ok((diffuse, specular))
}

pub fn relight_env(
    gb: &GBuffer,
    camera: &Camera,
    env: &EnvironmentMap,
    samples_per_pixel: usize,
    seed: u64,
) -> Result<ImagePlane> {
    let (mut d, s) = relight_env_split(gb, camera, env, samples_per_pixel, seed)?;
    for (a, b) in d.data_mut().iter_mut().zip(s.data()) {
        *a += b;
    }
    Ok(d)
}
