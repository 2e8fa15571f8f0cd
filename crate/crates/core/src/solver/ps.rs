//! Lambertian photometric stereo with known near point lights.

use nalgebra::{Matrix3, SymmetricEigen};

use crate::math::{luminance, Vec3};

/// One observation of a pixel under a known light.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LightObservation {
    pub position: Vec3,
    pub rgb: [f64; 3],
}

/// Result of the per-pixel least-squares solve `M·g = b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsSolution {
    /// Unscaled solution; its direction is the normal.
    pub g: Vec3,
    pub condition: f64,
    pub used: usize,
}

impl PsSolution {
    pub fn normal(&self) -> Vec3 {
        self.g.normalize()
    }
}

/// Solves for `g` from unit light directions and radiance values already
/// corrected for distance falloff. Returns `None` with fewer than three
/// rows, a rank-deficient or ill-conditioned system (`cond > max_condition`),
/// or a degenerate solution.
pub fn ps_solve(rows: &[(Vec3, f64)], max_condition: f64) -> Option<PsSolution> {
    if rows.len() < 3 {
        return None;
    }
    let mut mtm = Matrix3::zeros();
    let mut mtb = Vec3::zeros();
    for (l, b) in rows {
        mtm += l * l.transpose();
        mtb += l * *b;
    }
    let eig = SymmetricEigen::new(mtm);
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if !(min > 0.0) {
        return None;
    }
    // cond(M) = sqrt(cond(MᵀM))
    let condition = (max / min).sqrt();
    if !(condition <= max_condition) {
        return None;
    }
    let g = mtm.cholesky()?.solve(&mtb);
    if !(g.norm() > 0.0) || !g.iter().all(|v| v.is_finite()) {
        return None;
    }
    Some(PsSolution {
        g,
        condition,
        used: rows.len(),
    })
}

/// Photometric stereo at one surface point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsPixel {
    pub normal: Vec3,
    /// `π‖g‖ / E` with `E` the light's luminance intensity.
    pub pseudo_albedo: f64,
    /// Per-channel least-squares albedo given the recovered normal.
    pub albedo: [f64; 3],
    pub condition: f64,
}

pub fn ps_pixel(
    point: &Vec3,
    observations: &[LightObservation],
    intensity: [f64; 3],
    shadow_threshold: f64,
    max_condition: f64,
) -> Option<PsPixel> {
    let rows: Vec<(Vec3, f64, [f64; 3])> = observations
        .iter()
        .filter(|o| luminance(o.rgb) >= shadow_threshold)
        .map(|o| {
            let d = o.position - point;
            let r2 = d.norm_squared();
            (d / r2.sqrt(), r2, o.rgb)
        })
        .collect();
    let lum_rows: Vec<(Vec3, f64)> = rows.iter().map(|(l, r2, rgb)| (*l, luminance(*rgb) * r2)).collect();
    let sol = ps_solve(&lum_rows, max_condition)?;
    let normal = sol.normal();
    let e = luminance(intensity);
    let pseudo_albedo = std::f64::consts::PI * sol.g.norm() / e;

    let mut num = [0.0; 3];
    let mut den = 0.0;
    for (l, r2, rgb) in &rows {
        let s = normal.dot(l).max(0.0);
        den += s * s;
        for c in 0..3 {
            num[c] += s * rgb[c] * r2;
        }
    }
    let mut albedo = [pseudo_albedo; 3];
    if den > 0.0 {
        for c in 0..3 {
            albedo[c] = std::f64::consts::PI * num[c] / (den * intensity[c]);
        }
    }
    Some(PsPixel {
        normal,
        pseudo_albedo,
        albedo: albedo.map(|a| a.clamp(0.0, 1.0)),
        condition: sol.condition,
    })
}
