//! Finite-difference Jacobian oracle for the per-pixel residuals, built on
//! the independent forward model in [`super::oracle`].

#![allow(dead_code)]

use lightrig_core::math::{vec3, Vec3};
use lightrig_core::solver::lm::{Params, PARAMS};
use lightrig_core::solver::{LightObservation, NormalFrame, PixelProblem};
use lightrig_core::{light_rig_default, Camera, MaterialSample, SolverConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::oracle;

pub const INTENSITY: [f64; 3] = [16.0; 3];

pub fn camera_pos() -> Vec3 {
    vec3(0.0, 0.0, 4.0)
}

/// Default-rig light positions for a front camera at distance 4.
pub fn rig_positions() -> Vec<Vec3> {
    let cam = Camera::front(4.0, 0.8, 8, 8);
    let rig = light_rig_default();
    (0..rig.len()).map(|i| rig.position(i, &cam).unwrap()).collect()
}

/// Noise-free observations of a surface point, shaded by the test oracle.
pub fn observe(point: Vec3, n: Vec3, mat: &MaterialSample) -> Vec<LightObservation> {
    let view = (camera_pos() - point).normalize();
    rig_positions()
        .into_iter()
        .map(|position| {
            let rgb = oracle::radiance(
                n.into(),
                view.into(),
                point.into(),
                position.into(),
                INTENSITY,
                mat.albedo,
                mat.roughness,
                mat.metallic,
            );
            LightObservation { position, rgb }
        })
        .collect()
}

pub fn sphere_point(n: Vec3) -> Vec3 {
    n.normalize()
}

/// Oracle residuals for the solver's parameter vector.
pub fn oracle_residuals(problem: &PixelProblem, frame: &NormalFrame, p: &Params) -> Vec<f64> {
    let n = oracle::unit(oracle::add(
        oracle::add(frame.base.into(), oracle::scale(frame.t1.into(), p[0])),
        oracle::scale(frame.t2.into(), p[1]),
    ));
    let prior = (1.0 + problem.prior_weight * (p[5] - problem.prior_target).powi(2)).sqrt();
    let mut out = Vec::new();
    for obs in &problem.lights {
        let pred = oracle::radiance(
            n,
            problem.view.into(),
            problem.point.into(),
            obs.position.into(),
            problem.intensity,
            [p[2], p[3], p[4]],
            p[5],
            p[6],
        );
        for c in 0..3 {
            out.push(prior * (pred[c] - obs.rgb[c]));
        }
    }
    out
}

/// Five-point central differences of the oracle residuals.
pub fn oracle_jacobian(problem: &PixelProblem, frame: &NormalFrame, p: &Params, h: f64) -> Vec<[f64; PARAMS]> {
    let m = oracle_residuals(problem, frame, p).len();
    let mut jac = vec![[0.0; PARAMS]; m];
    for k in 0..PARAMS {
        let at = |d: f64| {
            let mut q = *p;
            q[k] += d;
            oracle_residuals(problem, frame, &q)
        };
        let (p2, p1, m1, m2) = (at(2.0 * h), at(h), at(-h), at(-2.0 * h));
        for i in 0..m {
            jac[i][k] = (-p2[i] + 8.0 * p1[i] - 8.0 * m1[i] + m2[i]) / (12.0 * h);
        }
    }
    jac
}

/// Random interior point: every light strictly in front of the surface and
/// material away from its bounds.
pub fn random_interior(rng: &mut ChaCha8Rng) -> (PixelProblem, NormalFrame, Params) {
    let positions = rig_positions();
    loop {
        let n = vec3(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3), 1.0).normalize();
        let point = sphere_point(n);
        let view = (camera_pos() - point).normalize();
        let lit = positions.iter().all(|l| n.dot(&(l - point).normalize()) > 0.05);
        if !lit {
            continue;
        }
        let truth = MaterialSample::new(
            [rng.random_range(0.1..0.9), rng.random_range(0.1..0.9), rng.random_range(0.1..0.9)],
            rng.random_range(0.2..0.9),
            rng.random_range(0.05..0.95),
        );
        let obs = observe(point, n, &truth);
        let problem = PixelProblem::new(point, view, INTENSITY, &obs, &SolverConfig::default());
        let frame = NormalFrame::new(n);
        let p: Params = [
            rng.random_range(-0.05..0.05),
            rng.random_range(-0.05..0.05),
            rng.random_range(0.1..0.9),
            rng.random_range(0.1..0.9),
            rng.random_range(0.1..0.9),
            rng.random_range(0.2..0.9),
            rng.random_range(0.05..0.95),
        ];
        return (problem, frame, p);
    }
}

/// Frobenius relative error of the solver Jacobian against the oracle.
pub fn jacobian_relative_error(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (problem, frame, p) = random_interior(&mut rng);
    let got = problem.jacobian(&frame, &p, SolverConfig::default().fd_step);
    let want = oracle_jacobian(&problem, &frame, &p, 1e-6);
    let mut diff = 0.0;
    let mut norm = 0.0;
    for (g, w) in got.iter().zip(&want) {
        for k in 0..PARAMS {
            diff += (g[k] - w[k]).powi(2);
            norm += w[k].powi(2);
        }
    }
    (diff / norm).sqrt()
}
