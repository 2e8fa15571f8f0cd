//! G-buffer estimation from multi-light observations: photometric-stereo
//! initialization followed by per-pixel nonlinear least squares.

pub mod config;
pub mod lm;
pub mod ps;
pub mod search;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{RobustLoss, SolverConfig};
pub use lm::{refine_pixel, refine_pixel_observed, NormalFrame, PixelEstimate, PixelProblem};
pub use ps::{ps_pixel, ps_solve, LightObservation, PsPixel};

use crate::camera::{Camera, CameraFrame};
use crate::error::{Error, Result};
use crate::gbuffer::{GBuffer, MultiLightSet};
use crate::image::ImagePlane;
use crate::brdf::{shade_point, MaterialSample};
use crate::math::{luminance, vec3, Vec3};
use crate::rig::{pose_position, LightRig};

/// Surface point seen through pixel `(x, y)`: from recorded hit depth when
/// available, otherwise where the ray meets the unit sphere (or its closest
/// approach to the origin).
pub fn surface_point(frame: &CameraFrame, x: usize, y: usize, depth: Option<&ImagePlane>) -> Vec3 {
    let dir = frame.ray_dir(x, y);
    if let Some(d) = depth {
        let t = d.pixel(x, y)[0];
        if t > 0.0 {
            return frame.origin + dir * t as f64;
        }
    }
    let b = frame.origin.dot(&dir);
    let disc = b * b - (frame.origin.norm_squared() - 1.0);
    let t = if disc >= 0.0 { -b - disc.sqrt() } else { -b };
    frame.origin + dir * t.max(0.0)
}

/// Light positions in a canonical (θ, φ) order, so results do not depend on
/// the order images are supplied in.
fn canonical_lights(mls: &MultiLightSet, rig: &LightRig, camera: &Camera) -> Result<Vec<(usize, Vec3)>> {
    let mut order: Vec<usize> = (0..mls.len()).collect();
    order.sort_by(|&a, &b| {
        let (pa, pb) = (mls.poses[a], mls.poses[b]);
        pa.theta.total_cmp(&pb.theta).then(pa.phi.total_cmp(&pb.phi))
    });
    order
        .into_iter()
        .map(|i| Ok((i, pose_position(mls.poses[i], rig.radius, camera)?)))
        .collect()
}

fn observations_at(mls: &MultiLightSet, lights: &[(usize, Vec3)], index: usize) -> Vec<LightObservation> {
    lights
        .iter()
        .map(|&(i, position)| LightObservation {
            position,
            rgb: mls.images[i].rgb_at(index),
        })
        .collect()
}

/// Photometric-stereo maps: camera-space normals, luminance pseudo-albedo
/// and the validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct PsMaps {
    pub normals: ImagePlane,
    pub pseudo_albedo: ImagePlane,
    pub valid: Vec<bool>,
}

pub fn lambertian_ps(mls: &MultiLightSet, camera: &Camera, rig: &LightRig) -> Result<PsMaps> {
    let cfg = SolverConfig::default();
    lambertian_ps_with(mls, camera, rig, cfg.shadow_threshold, cfg.max_condition)
}

pub fn lambertian_ps_with(
    mls: &MultiLightSet,
    camera: &Camera,
    rig: &LightRig,
    shadow_threshold: f64,
    max_condition: f64,
) -> Result<PsMaps> {
    mls.validate()?;
    let frame = camera.frame()?;
    let lights = canonical_lights(mls, rig, camera)?;
    let (w, h) = (mls.input.width(), mls.input.height());
    let results: Vec<Option<PsPixel>> = (0..w * h)
        .into_par_iter()
        .map(|i| {
            if mls.alpha.data()[i] <= 0.5 {
                return None;
            }
            let point = surface_point(&frame, i % w, i / w, mls.depth.as_ref());
            let obs = observations_at(mls, &lights, i);
            ps_pixel(&point, &obs, rig.intensity, shadow_threshold, max_condition)
        })
        .collect();
    let mut normals = ImagePlane::zeros(w, h, 3);
    let mut pseudo_albedo = ImagePlane::zeros(w, h, 1);
    let mut valid = vec![false; w * h];
    for (i, r) in results.iter().enumerate() {
        let (n, a) = match r {
            Some(px) => {
                valid[i] = true;
                (front_facing(frame.world_to_camera(&px.normal)), px.pseudo_albedo)
            }
            None => (vec3(0.0, 0.0, 1.0), 0.0),
        };
        normals.data_mut()[i * 3..i * 3 + 3].copy_from_slice(&[n.x as f32, n.y as f32, n.z as f32]);
        pseudo_albedo.data_mut()[i] = a as f32;
    }
    Ok(PsMaps {
        normals,
        pseudo_albedo,
        valid,
    })
}

fn front_facing(n: Vec3) -> Vec3 {
    if n.z >= 0.0 {
        return n.normalize();
    }
    let flat = vec3(n.x, n.y, 0.0);
    if flat.norm() > 0.0 {
        flat.normalize()
    } else {
        vec3(0.0, 0.0, 1.0)
    }
}

/// Convergence statistics of one [`solve_gbuffer`] call.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub pixels: usize,
    pub foreground: usize,
    pub converged: usize,
    pub unconverged: usize,
    /// Foreground pixels photometric stereo could not initialize.
    pub invalid: usize,
    pub mean_iterations: f64,
    pub mean_residual_rms: f64,
    pub max_residual_rms: f64,
    /// Not serialized, so reports stay byte-reproducible.
    #[serde(skip)]
    pub wall_time_s: f64,
}

impl SolverReport {
    /// Every foreground pixel failed to initialize.
    pub fn entirely_invalid(&self) -> bool {
        self.foreground > 0 && self.invalid == self.foreground
    }
}

/// Relative data residual above which a pixel is re-solved from coarse
/// search starts.
const RESTART_RESIDUAL: f64 = 1e-5;

fn observation_rms(lights: &[LightObservation]) -> f64 {
    let n = lights.len() * 3;
    if n == 0 {
        return 0.0;
    }
    (lights.iter().flat_map(|o| o.rgb).map(|v| v * v).sum::<f64>() / n as f64).sqrt()
}

/// Refinements started from coarse-search candidates on poorly fit pixels.
const SEARCH_STARTS: usize = 3;

/// Half vectors averaged with squared-luminance weights: a normal estimate
/// for specular-dominated pixels, where Lambertian stereo is biased toward
/// the highlight.
fn specular_normal(problem: &PixelProblem) -> Option<Vec3> {
    let mut sum = Vec3::zeros();
    for obs in &problem.lights {
        let half = (obs.position - problem.point).normalize() + problem.view;
        let l = crate::math::luminance(obs.rgb);
        if half.norm() > 1e-9 {
            sum += half.normalize() * (l * l);
        }
    }
    (sum.norm() > 0.0).then(|| sum.normalize())
}

#[derive(Debug, Clone, Copy)]
struct PixelOutcome {
    estimate: PixelEstimate,
    valid: bool,
}

fn solve_pixel(
    frame: &CameraFrame,
    mls: &MultiLightSet,
    lights: &[(usize, Vec3)],
    rig: &LightRig,
    cfg: &SolverConfig,
    index: usize,
) -> Result<PixelOutcome> {
    let w = mls.input.width();
    let (x, y) = (index % w, index / w);
    let point = surface_point(frame, x, y, mls.depth.as_ref());
    let view = (frame.origin - point).normalize();
    let obs = observations_at(mls, lights, index);
    let estimate = estimate_pixel(point, view, &obs, rig.intensity, cfg)?;
    Ok(match estimate {
        Some(estimate) => PixelOutcome { estimate, valid: true },
        None => {
            // The fallback normal faces the camera; its albedo is the
            // least-squares fit to this pixel's own observations, so a pixel
            // dark under every light stays dark when relit.
            let normal = -frame.forward;
            let problem = PixelProblem::new(point, view, rig.intensity, &obs, cfg);
            let (albedo, _) = search::fit_albedo(&problem, &normal, cfg.roughness_init, cfg.metallic_init);
            PixelOutcome {
                estimate: PixelEstimate::initial(normal, albedo, cfg.roughness_init, cfg.metallic_init),
                valid: false,
            }
        }
    })
}

/// Dark observations predicted brighter than this fraction of the brightest
/// observation are treated as cast shadows.
const CAST_SHADOW_FRACTION: f64 = 0.02;
/// Refits after removing newly detected cast shadows.
const CAST_SHADOW_PASSES: usize = 2;
/// The lit-only hypothesis replaces a fit it does not explain exactly when
/// its residual RMS is below this fraction of the fit's.
const ALTERNATIVE_GAIN: f64 = 0.5;

/// Photometric-stereo initialization and multi-start refinement of one
/// surface point. `None` when photometric stereo cannot initialize it.
///
/// A point light hidden by other geometry leaves an observation at zero that
/// no local shading can explain. After each fit, dark observations the fit
/// predicts as clearly lit are dropped and the point is refit, as long as
/// three lit observations remain. Attached shadows are predicted dark and
/// stay in the fit.
pub fn estimate_pixel(
    point: Vec3,
    view: Vec3,
    obs: &[LightObservation],
    intensity: [f64; 3],
    cfg: &SolverConfig,
) -> Result<Option<PixelEstimate>> {
    let Some(first) = fit_observations(point, view, obs, intensity, cfg)? else {
        return Ok(None);
    };
    let (mut best, kept) = drop_cast_shadows(point, view, obs, first, intensity, cfg)?;
    let good_enough = RESTART_RESIDUAL * observation_rms(&kept);
    let is_dark = |o: &LightObservation| luminance(o.rgb) < cfg.shadow_threshold;
    let lit: Vec<LightObservation> = kept.iter().filter(|o| !is_dark(o)).copied().collect();
    if best.residual_rms <= good_enough || lit.len() == kept.len() || lit.len() < 3 {
        return Ok(Some(best));
    }
    // A cast shadow the first fit happened to explain as an attached one is
    // never flagged. Fit the lit observations alone, re-admit the dark ones
    // that fit predicts dark, and keep it if it explains its set clearly
    // better.
    let Some(lit_fit) = fit_observations(point, view, &lit, intensity, cfg)? else {
        return Ok(Some(best));
    };
    let (alt, alt_kept) = drop_cast_shadows(point, view, &kept, lit_fit, intensity, cfg)?;
    let alt_good = RESTART_RESIDUAL * observation_rms(&alt_kept);
    if alt.residual_rms <= alt_good || alt.residual_rms < ALTERNATIVE_GAIN * best.residual_rms {
        best = alt;
    }
    Ok(Some(best))
}

/// Repeatedly removes dark observations `fit` predicts as clearly lit and
/// refits, keeping at least three lit observations. Returns the final fit
/// and the observations it used.
fn drop_cast_shadows(
    point: Vec3,
    view: Vec3,
    obs: &[LightObservation],
    mut fit: PixelEstimate,
    intensity: [f64; 3],
    cfg: &SolverConfig,
) -> Result<(PixelEstimate, Vec<LightObservation>)> {
    let mut kept = obs.to_vec();
    for _ in 0..CAST_SHADOW_PASSES {
        let brightest = kept.iter().map(|o| luminance(o.rgb)).fold(0.0, f64::max);
        let cutoff = (CAST_SHADOW_FRACTION * brightest).max(10.0 * cfg.shadow_threshold);
        let material = MaterialSample::new(fit.albedo, fit.roughness, fit.metallic);
        let n = fit.normal_vec();
        let shadowed = |o: &LightObservation| {
            luminance(o.rgb) < cfg.shadow_threshold
                && luminance(shade_point(&n, &view, &point, &material, &o.position, intensity, true)) > cutoff
        };
        let remaining: Vec<LightObservation> = kept.iter().filter(|o| !shadowed(o)).copied().collect();
        let lit = remaining.iter().filter(|o| luminance(o.rgb) >= cfg.shadow_threshold).count();
        if remaining.len() == kept.len() || lit < 3 {
            break;
        }
        match fit_observations(point, view, &remaining, intensity, cfg)? {
            Some(refit) => fit = refit,
            None => break,
        }
        kept = remaining;
    }
    Ok((fit, kept))
}

fn fit_observations(
    point: Vec3,
    view: Vec3,
    obs: &[LightObservation],
    intensity: [f64; 3],
    cfg: &SolverConfig,
) -> Result<Option<PixelEstimate>> {
    let Some(ps) = ps_pixel(&point, obs, intensity, cfg.shadow_threshold, cfg.max_condition) else {
        return Ok(None);
    };
    let problem = PixelProblem::new(point, view, intensity, obs, cfg);
    let good_enough = RESTART_RESIDUAL * observation_rms(&problem.lights);
    let first = refine_pixel(
        &problem,
        &PixelEstimate::initial(ps.normal, ps.albedo, cfg.roughness_init, cfg.metallic_init),
        cfg,
    )?;
    if first.residual_rms <= good_enough || problem.lights.len() < 3 {
        return Ok(Some(first));
    }
    let mut best = first;
    let extra: Vec<Vec3> = std::iter::once(ps.normal).chain(specular_normal(&problem)).collect();
    for init in search::coarse_starts(&problem, &extra, SEARCH_STARTS) {
        let candidate = refine_pixel(&problem, &init, cfg)?;
        if candidate.objective < best.objective {
            best = candidate;
        }
        if candidate.residual_rms <= good_enough {
            break;
        }
    }
    Ok(Some(best))
}

/// Estimates the full G-buffer from `mls`. Light positions come from the
/// set's poses on a sphere of `rig.radius` with `rig.intensity`; `input`
/// only has to agree in size.
pub fn solve_gbuffer(
    input: &ImagePlane,
    mls: &MultiLightSet,
    camera: &Camera,
    rig: &LightRig,
    cfg: &SolverConfig,
) -> Result<(GBuffer, SolverReport)> {
    let start = Instant::now();
    if mls.is_empty() {
        return Err(Error::Underdetermined);
    }
    mls.validate()?;
    cfg.validate()?;
    if !input.same_size(&mls.alpha) {
        return Err(Error::DimensionMismatch("input and multi-light set sizes differ".into()));
    }
    if camera.width != input.width() || camera.height != input.height() {
        return Err(Error::DimensionMismatch("camera and image resolution differ".into()));
    }
    let frame = camera.frame()?;
    let lights = canonical_lights(mls, rig, camera)?;
    let (w, h) = (input.width(), input.height());

    let outcomes: Vec<Option<PixelOutcome>> = (0..w * h)
        .into_par_iter()
        .map(|i| {
            if mls.alpha.data()[i] <= 0.5 {
                return Ok(None);
            }
            solve_pixel(&frame, mls, &lights, rig, cfg, i).map(Some)
        })
        .collect::<Result<_>>()?;

    let mut gb = GBuffer::zeros(w, h);
    if let Some(d) = &mls.depth {
        gb.depth = d.clone();
    }
    let mut report = SolverReport {
        pixels: w * h,
        ..Default::default()
    };
    let mut iterations = 0usize;
    let mut residual_sum = 0.0;
    for (i, outcome) in outcomes.iter().enumerate() {
        let Some(o) = outcome else {
            gb.depth.data_mut()[i] = 0.0;
            continue;
        };
        report.foreground += 1;
        if !o.valid {
            report.invalid += 1;
        }
        if o.estimate.converged {
            report.converged += 1;
        } else {
            report.unconverged += 1;
        }
        iterations += o.estimate.iterations;
        residual_sum += o.estimate.residual_rms;
        report.max_residual_rms = report.max_residual_rms.max(o.estimate.residual_rms);

        let est = &o.estimate;
        gb.alpha.data_mut()[i] = 1.0;
        gb.set_normal(i, &front_facing(frame.world_to_camera(&est.normal_vec())));
        gb.set_albedo(i, est.albedo);
        gb.roughness.data_mut()[i] = est.roughness.clamp(0.0, 1.0) as f32;
        gb.metallic.data_mut()[i] = est.metallic.clamp(0.0, 1.0) as f32;
    }
    if report.foreground > 0 {
        report.mean_iterations = iterations as f64 / report.foreground as f64;
        report.mean_residual_rms = residual_sum / report.foreground as f64;
    }
    report.wall_time_s = start.elapsed().as_secs_f64();
    Ok((gb, report))
}
