//! Per-pixel Levenberg-Marquardt refinement of normal, albedo, roughness
//! and metallic against multi-light observations.
//!
//! The seven parameters are two tangent-plane increments of the normal,
//! albedo RGB, roughness and metallic. Material parameters are box
//! constrained to [0, 1] by projection, with bound-active parameters frozen
//! for the step, so estimates can land exactly on the bounds. The normal
//! frame is rebuilt around the new normal after every accepted step.

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::brdf::{shade_point, MaterialSample};
use crate::error::{Error, Result};
use crate::math::{luminance, tangent_frame, Vec3};
use crate::solver::config::{RobustLoss, SolverConfig};
use crate::solver::ps::LightObservation;

pub const PARAMS: usize = 7;
/// Index of the first box-constrained material parameter.
const FIRST_BOUNDED: usize = 2;

pub type Params = [f64; PARAMS];
type Mat7 = SMatrix<f64, PARAMS, PARAMS>;
type Vec7 = SVector<f64, PARAMS>;

/// One pixel's estimate. `normal` is in world space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelEstimate {
    pub normal: [f64; 3],
    pub albedo: [f64; 3],
    pub roughness: f64,
    pub metallic: f64,
    pub residual_rms: f64,
    /// Final robust objective, prior scale included.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Number of rejected steps (damping escalations).
    pub rejected_steps: usize,
}

impl PixelEstimate {
    pub fn initial(normal: Vec3, albedo: [f64; 3], roughness: f64, metallic: f64) -> Self {
        Self {
            normal: [normal.x, normal.y, normal.z],
            albedo,
            roughness,
            metallic,
            residual_rms: 0.0,
            objective: f64::INFINITY,
            iterations: 0,
            converged: false,
            rejected_steps: 0,
        }
    }

    pub fn normal_vec(&self) -> Vec3 {
        Vec3::from(self.normal)
    }

    pub fn material(&self) -> MaterialSample {
        MaterialSample::new(self.albedo, self.roughness, self.metallic)
    }
}

/// Observations and geometry of one surface point.
#[derive(Debug, Clone)]
pub struct PixelProblem {
    pub point: Vec3,
    /// Unit vector from the point toward the camera.
    pub view: Vec3,
    pub intensity: [f64; 3],
    pub lights: Vec<LightObservation>,
    pub robust: RobustLoss,
    pub prior_weight: f64,
    pub prior_target: f64,
    /// Luminance below which an observation counts as unlit.
    pub shadow_threshold: f64,
}

/// Normal frame the tangent increments are expressed in.
#[derive(Debug, Clone, Copy)]
pub struct NormalFrame {
    pub base: Vec3,
    pub t1: Vec3,
    pub t2: Vec3,
}

impl NormalFrame {
    pub fn new(base: Vec3) -> Self {
        let base = base.normalize();
        let (t1, t2) = tangent_frame(&base);
        Self { base, t1, t2 }
    }

    #[inline]
    pub fn normal(&self, a: f64, b: f64) -> Vec3 {
        (self.base + self.t1 * a + self.t2 * b).normalize()
    }
}

/// Maps parameters to a shading normal and (bounded) material.
#[inline]
pub fn decode(frame: &NormalFrame, p: &Params) -> (Vec3, MaterialSample) {
    let n = frame.normal(p[0], p[1]);
    let albedo = [p[2], p[3], p[4]];
    (n, MaterialSample::new(albedo, p[5], p[6]))
}

pub fn encode(est: &PixelEstimate) -> Params {
    let mut p = [
        0.0,
        0.0,
        est.albedo[0],
        est.albedo[1],
        est.albedo[2],
        est.roughness,
        est.metallic,
    ];
    project(&mut p);
    p
}

fn project(p: &mut Params) {
    for v in &mut p[FIRST_BOUNDED..] {
        *v = v.clamp(0.0, 1.0);
    }
}

/// Bounded parameters sitting on a bound the descent direction points past.
fn active_bounds(p: &Params, grad: &Vec7) -> [bool; PARAMS] {
    let mut active = [false; PARAMS];
    for k in FIRST_BOUNDED..PARAMS {
        active[k] = (p[k] <= 0.0 && grad[k] > 0.0) || (p[k] >= 1.0 && grad[k] < 0.0);
    }
    active
}

impl PixelProblem {
    /// Builds a problem, dropping clipped observations. Dark observations
    /// stay: they constrain the normal through attached shadows.
    pub fn new(point: Vec3, view: Vec3, intensity: [f64; 3], observations: &[LightObservation], cfg: &SolverConfig) -> Self {
        let lights = observations
            .iter()
            .filter(|o| cfg.saturation_level.is_none_or(|s| o.rgb.iter().all(|&c| c < s)))
            .copied()
            .collect();
        Self {
            point,
            view,
            intensity,
            lights,
            robust: cfg.robust,
            prior_weight: cfg.roughness_prior_weight,
            prior_target: cfg.roughness_prior_target,
            shadow_threshold: cfg.shadow_threshold,
        }
    }

    pub fn residual_count(&self) -> usize {
        self.lights.len() * 3
    }

    /// Multiplier of the shading errors that carries the roughness prior.
    /// The prior acts relative to the data misfit, so an exactly explained
    /// pixel is not biased.
    #[inline]
    pub fn prior_scale(&self, roughness: f64) -> f64 {
        (1.0 + self.prior_weight * (roughness - self.prior_target).powi(2)).sqrt()
    }

    /// Raw residuals: `3·L` shading errors scaled by [`Self::prior_scale`].
    pub fn residuals(&self, frame: &NormalFrame, p: &Params, out: &mut Vec<f64>) {
        out.clear();
        let (n, mat) = decode(frame, p);
        let scale = self.prior_scale(mat.roughness);
        for obs in &self.lights {
            let pred = shade_point(&n, &self.view, &self.point, &mat, &obs.position, self.intensity, true);
            for c in 0..3 {
                out.push(scale * (pred[c] - obs.rgb[c]));
            }
        }
    }

    fn light_weights(&self, r: &[f64]) -> Vec<f64> {
        let n = self.lights.len();
        match self.robust {
            RobustLoss::None => vec![1.0; n],
            RobustLoss::Huber { delta } => (0..n)
                .map(|i| {
                    let s = (r[3 * i].powi(2) + r[3 * i + 1].powi(2) + r[3 * i + 2].powi(2)).sqrt();
                    if s <= delta {
                        1.0
                    } else {
                        delta / s
                    }
                })
                .collect(),
        }
    }

    /// Robust objective from raw residuals.
    pub fn cost_from(&self, r: &[f64]) -> f64 {
        let mut cost = 0.0;
        for i in 0..self.lights.len() {
            let s2 = r[3 * i].powi(2) + r[3 * i + 1].powi(2) + r[3 * i + 2].powi(2);
            cost += match self.robust {
                RobustLoss::None => s2,
                RobustLoss::Huber { delta } => {
                    let s = s2.sqrt();
                    if s <= delta {
                        s2
                    } else {
                        2.0 * delta * s - delta * delta
                    }
                }
            };
        }
        cost
    }

    pub fn cost(&self, frame: &NormalFrame, p: &Params) -> f64 {
        let mut r = Vec::with_capacity(self.residual_count());
        self.residuals(frame, p, &mut r);
        self.cost_from(&r)
    }

    /// Objective level below which residuals are within the f32 storage
    /// precision of the observations.
    pub fn noise_floor(&self) -> f64 {
        self.lights
            .iter()
            .flat_map(|o| o.rgb)
            .map(|v| (f32::EPSILON as f64 * v.abs()).powi(2))
            .sum()
    }

    /// RMS shading error, without the prior scale.
    fn data_rms(&self, r: &[f64], roughness: f64) -> f64 {
        if r.is_empty() {
            return 0.0;
        }
        (r.iter().map(|v| v * v).sum::<f64>() / r.len() as f64).sqrt() / self.prior_scale(roughness)
    }

    /// Central finite-difference Jacobian of the raw residuals, row-major
    /// `residual_count × 7`.
    pub fn jacobian(&self, frame: &NormalFrame, p: &Params, step: f64) -> Vec<[f64; PARAMS]> {
        let m = self.residual_count();
        let mut jac = vec![[0.0; PARAMS]; m];
        let mut plus = Vec::with_capacity(m);
        let mut minus = Vec::with_capacity(m);
        for k in 0..PARAMS {
            let mut hi = *p;
            let mut lo = *p;
            hi[k] += step;
            lo[k] -= step;
            self.residuals(frame, &hi, &mut plus);
            self.residuals(frame, &lo, &mut minus);
            for i in 0..m {
                jac[i][k] = (plus[i] - minus[i]) / (2.0 * step);
            }
        }
        jac
    }
}

/// Geodesic acceleration is used only while it stays below this fraction of
/// the velocity step.
const ACCEL_RATIO: f64 = 0.75;
/// Probe length, relative to the step, of the directional second derivative.
const ACCEL_PROBE: f64 = 0.1;

impl PixelProblem {
    /// `Jᵀ W r''` for the directional second derivative `r''` of the
    /// residuals along `v`.
    fn weighted_curvature(
        &self,
        frame: &NormalFrame,
        p: &Params,
        r: &[f64],
        jac: &[[f64; PARAMS]],
        weights: &[f64],
        v: &Vec7,
    ) -> Vec7 {
        let h = ACCEL_PROBE;
        let mut probe = *p;
        for k in 0..PARAMS {
            probe[k] += h * v[k];
        }
        let mut rp = Vec::with_capacity(r.len());
        self.residuals(frame, &probe, &mut rp);
        let mut out = Vec7::zeros();
        for (i, row) in jac.iter().enumerate() {
            let jv: f64 = (0..PARAMS).map(|k| row[k] * v[k]).sum();
            let second = 2.0 / h * ((rp[i] - r[i]) / h - jv);
            let w = weights[i / 3];
            for k in 0..PARAMS {
                out[k] += w * row[k] * second;
            }
        }
        out
    }
}

/// Minimizes the robust shading error starting from `init`.
pub fn refine_pixel(problem: &PixelProblem, init: &PixelEstimate, cfg: &SolverConfig) -> Result<PixelEstimate> {
    refine_pixel_observed(problem, init, cfg, &mut |_| {})
}

/// [`refine_pixel`], reporting the objective after every accepted step.
pub fn refine_pixel_observed(
    problem: &PixelProblem,
    init: &PixelEstimate,
    cfg: &SolverConfig,
    on_accept: &mut dyn FnMut(f64),
) -> Result<PixelEstimate> {
    let mut frame = NormalFrame::new(init.normal_vec());
    let mut params = encode(init);
    let mut r = Vec::with_capacity(problem.residual_count());
    problem.residuals(&frame, &params, &mut r);
    let mut cost = problem.cost_from(&r);
    if !cost.is_finite() || !frame.base.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidInitialization);
    }

    let floor = problem.noise_floor();
    let finish = |frame: &NormalFrame, params: &Params, r: &[f64], iterations, converged, rejected| {
        let (n, mat) = decode(frame, params);
        let rms = problem.data_rms(r, mat.roughness);
        let mat = mat.clamped();
        PixelEstimate {
            normal: [n.x, n.y, n.z],
            albedo: mat.albedo,
            roughness: mat.roughness,
            metallic: mat.metallic,
            residual_rms: rms,
            objective: problem.cost_from(r),
            iterations,
            converged,
            rejected_steps: rejected,
        }
    };

    let lit = problem.lights.iter().filter(|o| luminance(o.rgb) >= problem.shadow_threshold).count();
    if lit < 3 {
        return Ok(finish(&frame, &params, &r, 0, false, 0));
    }

    let mut damping = cfg.initial_damping;
    let mut rejected = 0;
    let mut trial_r = Vec::with_capacity(r.len());
    for iter in 0..cfg.max_iterations {
        if cost <= floor {
            return Ok(finish(&frame, &params, &r, iter, true, rejected));
        }
        // Linearize the IRLS-weighted system at the current point.
        let weights = problem.light_weights(&r);
        let jac = problem.jacobian(&frame, &params, cfg.fd_step);
        let mut jtj = Mat7::zeros();
        let mut jtr = Vec7::zeros();
        for (i, row) in jac.iter().enumerate() {
            let w = weights[i / 3];
            let jrow = SVector::<f64, PARAMS>::from_row_slice(row);
            jtj += jrow * jrow.transpose() * w;
            jtr += jrow * (w * r[i]);
        }
        let active = active_bounds(&params, &jtr);
        for k in (0..PARAMS).filter(|&k| active[k]) {
            for j in 0..PARAMS {
                jtj[(k, j)] = 0.0;
                jtj[(j, k)] = 0.0;
            }
            jtj[(k, k)] = 1.0;
            jtr[k] = 0.0;
        }
        let diag_floor = 1e-12 * jtj.diagonal().max().max(1e-12);

        loop {
            let mut lhs = jtj;
            for k in 0..PARAMS {
                lhs[(k, k)] += damping * jtj[(k, k)].max(diag_floor);
            }
            let step = match lhs.cholesky() {
                Some(ch) => {
                    let v = -ch.solve(&jtr);
                    let mut rhs = problem.weighted_curvature(&frame, &params, &r, &jac, &weights, &v);
                    for k in (0..PARAMS).filter(|&k| active[k]) {
                        rhs[k] = 0.0;
                    }
                    let accel = -ch.solve(&rhs);
                    if accel.iter().all(|a| a.is_finite()) && 2.0 * accel.norm() <= ACCEL_RATIO * v.norm() {
                        v + accel * 0.5
                    } else {
                        v
                    }
                }
                None => Vec7::zeros(),
            };
            let step_norm = step.norm();
            if step_norm < cfg.step_tolerance {
                return Ok(finish(&frame, &params, &r, iter, true, rejected));
            }
            let mut trial = params;
            for k in 0..PARAMS {
                trial[k] += step[k];
            }
            project(&mut trial);
            problem.residuals(&frame, &trial, &mut trial_r);
            let trial_cost = problem.cost_from(&trial_r);
            if trial_cost.is_finite() && trial_cost < cost {
                let decrease = (cost - trial_cost) / cost;
                // Re-center the normal frame on the accepted normal.
                let (n, _) = decode(&frame, &trial);
                frame = NormalFrame::new(n);
                trial[0] = 0.0;
                trial[1] = 0.0;
                params = trial;
                std::mem::swap(&mut r, &mut trial_r);
                cost = trial_cost;
                on_accept(cost);
                damping = (damping * cfg.damping_down).max(1e-15);
                if decrease < cfg.relative_tolerance {
                    return Ok(finish(&frame, &params, &r, iter + 1, true, rejected));
                }
                break;
            }
            rejected += 1;
            damping *= cfg.damping_up;
            if damping > cfg.max_damping {
                return Ok(finish(&frame, &params, &r, iter + 1, false, rejected));
            }
        }
    }
    Ok(finish(&frame, &params, &r, cfg.max_iterations, false, rejected))
}

