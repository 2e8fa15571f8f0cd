//! Coarse exhaustive search for start points on pixels the configured start
//! leaves poorly fit. Candidates pair a normal from a quasi-uniform set of
//! front-facing directions with a roughness from a fixed ladder and a binary
//! metallic; albedo follows in closed form, since shading is affine in
//! albedo for binary metallic.

use std::f64::consts::PI;

use crate::brdf::{ggx_ndf, shade_point, smith_g, MaterialSample, DIELECTRIC_F0};
use crate::math::{vec3, Vec3};
use crate::solver::lm::{PixelEstimate, PixelProblem};

const SEARCH_DIRECTIONS: usize = 512;
const ROUGHNESS_LADDER: [f64; 6] = [0.1, 0.2, 0.35, 0.5, 0.7, 1.0];
/// Selected starts sharing a metallic value are at least 15° apart.
const MIN_SEPARATION_COS: f64 = 0.966;
const ALT_ROUGHNESS: [f64; 2] = [0.2, 1.0];

/// Points of a Fibonacci lattice on the unit sphere.
pub fn fibonacci_sphere(count: usize) -> Vec<Vec3> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
            let r = (1.0 - z * z).sqrt();
            let t = golden * i as f64;
            vec3(r * t.cos(), r * t.sin(), z)
        })
        .collect()
}

/// Per-channel least-squares albedo in [0, 1] for a fixed normal, roughness
/// and binary metallic, with the resulting squared error.
pub fn fit_albedo(problem: &PixelProblem, n: &Vec3, roughness: f64, metallic: f64) -> ([f64; 3], f64) {
    let zero = MaterialSample::new([0.0; 3], roughness, metallic);
    let one = MaterialSample::new([1.0; 3], roughness, metallic);
    let mut num = [0.0; 3];
    let mut den = [0.0; 3];
    let mut cached = Vec::with_capacity(problem.lights.len());
    for obs in &problem.lights {
        let p0 = shade_point(n, &problem.view, &problem.point, &zero, &obs.position, problem.intensity, true);
        let p1 = shade_point(n, &problem.view, &problem.point, &one, &obs.position, problem.intensity, true);
        for c in 0..3 {
            let slope = p1[c] - p0[c];
            num[c] += slope * (obs.rgb[c] - p0[c]);
            den[c] += slope * slope;
        }
        cached.push((p0, p1));
    }
    let albedo: [f64; 3] = std::array::from_fn(|c| if den[c] > 0.0 { (num[c] / den[c]).clamp(0.0, 1.0) } else { 0.5 });
    let mut err = 0.0;
    for (obs, (p0, p1)) in problem.lights.iter().zip(&cached) {
        for c in 0..3 {
            let pred = p0[c] + albedo[c] * (p1[c] - p0[c]);
            err += (pred - obs.rgb[c]).powi(2);
        }
    }
    (albedo, err)
}

/// Light terms that do not depend on the normal.
struct LightTerm {
    dir: Vec3,
    half: Option<Vec3>,
    /// Schlick weight `(1 - v·h)^5`.
    schlick: f64,
    /// Irradiance scale `1 / r²`.
    falloff: f64,
    rgb: [f64; 3],
}

fn light_terms(problem: &PixelProblem) -> Vec<LightTerm> {
    problem
        .lights
        .iter()
        .map(|obs| {
            let to_light = obs.position - problem.point;
            let r2 = to_light.norm_squared();
            let dir = to_light / r2.sqrt();
            let half = dir + problem.view;
            let half = (half.norm() >= 1e-12).then(|| half.normalize());
            let v_dot_h = half.map_or(0.0, |h| problem.view.dot(&h).clamp(0.0, 1.0));
            LightTerm {
                dir,
                half,
                schlick: (1.0 - v_dot_h).powi(5),
                falloff: 1.0 / r2,
                rgb: obs.rgb,
            }
        })
        .collect()
}

/// Closed-form albedo and squared error of every ladder roughness and
/// binary metallic at normal `n`. Matches [`fit_albedo`].
fn score_normal(problem: &PixelProblem, terms: &[LightTerm], n: &Vec3, out: &mut Vec<(f64, PixelEstimate)>) {
    let e = problem.intensity;
    let n_dot_v = n.dot(&problem.view).clamp(0.0, 1.0);
    for &roughness in &ROUGHNESS_LADDER {
        let alpha = MaterialSample::new([0.0; 3], roughness, 0.0).alpha();
        let mut stats = [[0.0f64; 3]; 2];
        let mut dens = [[0.0f64; 3]; 2];
        let mut rows: [Vec<(f64, f64)>; 2] = [Vec::with_capacity(terms.len()), Vec::with_capacity(terms.len())];
        for t in terms {
            let n_dot_l = n.dot(&t.dir);
            let (irr, spec) = if n_dot_l <= 0.0 {
                (0.0, 0.0)
            } else {
                let spec = match t.half {
                    Some(h) => {
                        let n_dot_h = n.dot(&h).clamp(0.0, 1.0);
                        let dg = ggx_ndf(n_dot_h, alpha) * smith_g(n_dot_v, n_dot_l, alpha);
                        dg / (4.0 * n_dot_v * n_dot_l.min(1.0)).max(1e-6)
                    }
                    None => 0.0,
                };
                (n_dot_l * t.falloff, spec)
            };
            // (slope, offset) per metallic, before the channel intensity.
            let dielectric_f = DIELECTRIC_F0 + (1.0 - DIELECTRIC_F0) * t.schlick;
            rows[0].push((irr / PI, irr * spec * dielectric_f));
            rows[1].push((irr * spec * (1.0 - t.schlick), irr * spec * t.schlick));
        }
        let mut albedo = [[0.0f64; 3]; 2];
        for m in 0..2 {
            for (t, &(slope, offset)) in terms.iter().zip(&rows[m]) {
                for c in 0..3 {
                    let (sl, of) = (slope * e[c], offset * e[c]);
                    stats[m][c] += sl * (t.rgb[c] - of);
                    dens[m][c] += sl * sl;
                }
            }
            for c in 0..3 {
                albedo[m][c] = if dens[m][c] > 0.0 { (stats[m][c] / dens[m][c]).clamp(0.0, 1.0) } else { 0.5 };
            }
            let mut err = 0.0;
            for (t, &(slope, offset)) in terms.iter().zip(&rows[m]) {
                for c in 0..3 {
                    let pred = (offset + albedo[m][c] * slope) * e[c];
                    err += (pred - t.rgb[c]).powi(2);
                }
            }
            out.push((err, PixelEstimate::initial(*n, albedo[m], roughness, m as f64)));
        }
    }
}

/// Start points from the `count` best separated grid candidates, extra
/// normals included, best first.
pub fn coarse_starts(problem: &PixelProblem, extra_normals: &[Vec3], count: usize) -> Vec<PixelEstimate> {
    let mut normals: Vec<Vec3> = fibonacci_sphere(SEARCH_DIRECTIONS)
        .into_iter()
        .filter(|n| n.dot(&problem.view) > 0.0)
        .collect();
    normals.extend(extra_normals.iter().map(|n| n.normalize()));

    let terms = light_terms(problem);

    let mut scored: Vec<(f64, PixelEstimate)> = Vec::with_capacity(normals.len() * ROUGHNESS_LADDER.len() * 2);
    for n in &normals {
        score_normal(problem, &terms, n, &mut scored);
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut picked: Vec<PixelEstimate> = Vec::with_capacity(count);
    for (_, cand) in scored {
        if picked.len() == count {
            break;
        }
        let crowded = picked
            .iter()
            .any(|p| p.metallic == cand.metallic && p.normal_vec().dot(&cand.normal_vec()) > MIN_SEPARATION_COS);
        if !crowded {
            picked.push(cand);
        }
    }

    // Roughness basins are separated by ridges the refinement cannot cross,
    // so each pick is also tried with a contrasting roughness.
    let mut starts = Vec::with_capacity(picked.len() * 3);
    for p in picked {
        starts.push(p);
        for alt in ALT_ROUGHNESS {
            if (alt - p.roughness).abs() > 0.3 {
                let (albedo, _) = fit_albedo(problem, &p.normal_vec(), alt, p.metallic);
                starts.push(PixelEstimate::initial(p.normal_vec(), albedo, alt, p.metallic));
            }
        }
    }
    starts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fibonacci_points_are_unit_and_balanced() {
        let pts = fibonacci_sphere(512);
        assert!(pts.iter().all(|p| (p.norm() - 1.0).abs() < 1e-12));
        let upper = pts.iter().filter(|p| p.z > 0.0).count();
        assert_eq!(upper, 256);
    }

    fn glossy_problem() -> PixelProblem {
        use crate::solver::config::SolverConfig;
        use crate::solver::ps::LightObservation;
        let point = vec3(0.1, -0.2, 0.97).normalize();
        let view = (vec3(0.0, 0.0, 4.0) - point).normalize();
        let n = vec3(0.3, 0.1, 1.0).normalize();
        let mat = MaterialSample::new([0.6, 0.4, 0.2], 0.35, 1.0);
        let lights: Vec<LightObservation> = fibonacci_sphere(24)
            .into_iter()
            .filter(|d| d.z > 0.0)
            .map(|d| {
                let position = d * 4.0;
                let rgb = shade_point(&n, &view, &point, &mat, &position, [16.0; 3], true);
                LightObservation { position, rgb }
            })
            .collect();
        PixelProblem::new(point, view, [16.0; 3], &lights, &SolverConfig::default())
    }

    #[test]
    fn fast_scores_match_generic_fit() {
        let problem = glossy_problem();
        let n = vec3(0.2, 0.2, 1.0).normalize();
        let mut out = Vec::new();
        let terms = light_terms(&problem);
        score_normal(&problem, &terms, &n, &mut out);
        for (err, est) in out {
            let (albedo, generic) = fit_albedo(&problem, &n, est.roughness, est.metallic);
            assert!((err - generic).abs() <= 1e-9 * generic.max(1e-12), "{err} vs {generic}");
            for c in 0..3 {
                assert!((albedo[c] - est.albedo[c]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn exact_candidate_scores_zero() {
        let problem = glossy_problem();
        let (albedo, err) = fit_albedo(&problem, &vec3(0.3, 0.1, 1.0).normalize(), 0.35, 1.0);
        assert!(err < 1e-20);
        assert!((albedo[0] - 0.6).abs() < 1e-9);
    }
}
