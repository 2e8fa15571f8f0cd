//! Metallic-roughness microfacet BRDF: GGX distribution, separable
//! Schlick-GGX shadowing (k = α/2) and Schlick Fresnel with a 0.04
//! dielectric base.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::math::Vec3;

pub const ALPHA_MIN: f64 = 1e-3;
pub const DIELECTRIC_F0: f64 = 0.04;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialSample {
    pub albedo: [f64; 3],
    pub roughness: f64,
    pub metallic: f64,
}

impl MaterialSample {
    pub fn new(albedo: [f64; 3], roughness: f64, metallic: f64) -> Self {
        Self {
            albedo,
            roughness,
            metallic,
        }
    }

    /// Lobe width α = roughness², floored at [`ALPHA_MIN`].
    #[inline]
    pub fn alpha(&self) -> f64 {
        (self.roughness * self.roughness).max(ALPHA_MIN)
    }

    pub fn clamped(&self) -> Self {
        Self {
            albedo: self.albedo.map(|a| a.clamp(0.0, 1.0)),
            roughness: self.roughness.clamp(0.0, 1.0),
            metallic: self.metallic.clamp(0.0, 1.0),
        }
    }

    #[inline]
    pub fn f0(&self) -> [f64; 3] {
        self.albedo
            .map(|a| DIELECTRIC_F0 * (1.0 - self.metallic) + a * self.metallic)
    }
}

#[inline]
pub fn fresnel_schlick(cos_theta: f64, f0: [f64; 3]) -> [f64; 3] {
    let m = (1.0 - cos_theta.clamp(0.0, 1.0)).powi(5);
    f0.map(|f| f + (1.0 - f) * m)
}

#[inline]
pub fn ggx_ndf(n_dot_h: f64, alpha: f64) -> f64 {
    let a2 = alpha * alpha;
    let d = n_dot_h * n_dot_h * (a2 - 1.0) + 1.0;
    a2 / (PI * d * d)
}

#[inline]
fn schlick_g1(x: f64, k: f64) -> f64 {
    x / (x * (1.0 - k) + k)
}

#[inline]
pub fn smith_g(n_dot_v: f64, n_dot_l: f64, alpha: f64) -> f64 {
    let k = alpha * 0.5;
    schlick_g1(n_dot_v.clamp(0.0, 1.0), k) * schlick_g1(n_dot_l.clamp(0.0, 1.0), k)
}

/// Diffuse and specular BRDF values (per steradian, before the cosine).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrdfValue {
    pub diffuse: [f64; 3],
    pub specular: [f64; 3],
}

impl BrdfValue {
    #[inline]
    pub fn total(&self) -> [f64; 3] {
        [
            self.diffuse[0] + self.specular[0],
            self.diffuse[1] + self.specular[1],
            self.diffuse[2] + self.specular[2],
        ]
    }
}

pub fn eval_brdf(n: &Vec3, v: &Vec3, l: &Vec3, mat: &MaterialSample) -> BrdfValue {
    let kd = 1.0 - mat.metallic;
    let diffuse = mat.albedo.map(|a| kd * a / PI);
    let half = v + l;
    let len = half.norm();
    if len < 1e-12 {
        return BrdfValue {
            diffuse,
            specular: [0.0; 3],
        };
    }
    let h = half / len;
    let n_dot_v = n.dot(v).clamp(0.0, 1.0);
    let n_dot_l = n.dot(l).clamp(0.0, 1.0);
    let n_dot_h = n.dot(&h).clamp(0.0, 1.0);
    let v_dot_h = v.dot(&h).clamp(0.0, 1.0);
    let alpha = mat.alpha();
    let dg = ggx_ndf(n_dot_h, alpha) * smith_g(n_dot_v, n_dot_l, alpha);
    let denom = (4.0 * n_dot_v * n_dot_l).max(1e-6);
    let f = fresnel_schlick(v_dot_h, mat.f0());
    BrdfValue {
        diffuse,
        specular: f.map(|fc| dg * fc / denom),
    }
}

/// Radiance reflected toward `view_dir` from a point light.
#[allow(clippy::too_many_arguments)]
pub fn shade_point(
    n: &Vec3,
    view_dir: &Vec3,
    point: &Vec3,
    mat: &MaterialSample,
    light_pos: &Vec3,
    light_intensity: [f64; 3],
    visible: bool,
) -> [f64; 3] {
    if !visible {
        return [0.0; 3];
    }
    let to_light = light_pos - point;
    let r2 = to_light.norm_squared();
    let l = to_light / r2.sqrt();
    let n_dot_l = n.dot(&l);
    if n_dot_l <= 0.0 {
        return [0.0; 3];
    }
    let f = eval_brdf(n, view_dir, &l, mat).total();
    let s = n_dot_l / r2;
    [
        f[0] * s * light_intensity[0],
        f[1] * s * light_intensity[1],
        f[2] * s * light_intensity[2],
    ]
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_2;

    use proptest::prelude::*;

    use super::*;
    use crate::math::vec3;

    const EPS: f64 = 1e-12;

    fn unit(theta: f64, phi: f64) -> Vec3 {
        vec3(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos())
    }

    #[test]
    fn fresnel_examples() {
        assert!((fresnel_schlick(1.0, [0.04; 3])[0] - 0.04).abs() < EPS);
        assert!((fresnel_schlick(0.0, [0.04; 3])[0] - 1.0).abs() < EPS);
        assert!((fresnel_schlick(0.5, [0.04; 3])[0] - 0.07).abs() < EPS);
    }

    #[test]
    fn ndf_examples() {
        assert!((ggx_ndf(1.0, 1.0) - 1.0 / PI).abs() < EPS);
        assert!((ggx_ndf(1.0, 0.5) - 4.0 / PI).abs() < EPS);
        assert!((ggx_ndf(0.0, 0.5) - 0.25 / PI).abs() < EPS);
    }

    #[test]
    fn smith_examples() {
        assert!((smith_g(1.0, 1.0, 0.37) - 1.0).abs() < EPS);
        assert_eq!(smith_g(0.5, 0.0, 0.5), 0.0);
        assert!((smith_g(0.5, 1.0, 0.5) - 0.8).abs() < EPS);
    }

    #[test]
    fn brdf_examples() {
        let z = vec3(0.0, 0.0, 1.0);
        let metal = MaterialSample::new([0.3, 0.6, 0.9], 0.4, 1.0);
        assert_eq!(eval_brdf(&z, &z, &z, &metal).diffuse, [0.0; 3]);
        let white = MaterialSample::new([0.6; 3], 1.0, 0.0);
        let b = eval_brdf(&z, &z, &z, &white);
        assert!((b.diffuse[0] - 0.6 / PI).abs() < EPS);
        assert!((b.specular[0] - 0.04 / (4.0 * PI)).abs() < EPS);
        assert!((b.specular[0] - 0.003183).abs() < 1e-6);
        // Opposite v and l: no half vector, no specular.
        let degenerate = eval_brdf(&z, &z, &(-z), &white);
        assert_eq!(degenerate.specular, [0.0; 3]);
    }

    #[test]
    fn shade_point_examples() {
        let z = vec3(0.0, 0.0, 1.0);
        let mat = MaterialSample::new([0.6; 3], 1.0, 0.0);
        let origin = Vec3::zeros();
        assert_eq!(shade_point(&z, &z, &origin, &mat, &z, [1.0; 3], false), [0.0; 3]);
        assert_eq!(shade_point(&z, &z, &origin, &mat, &(-z), [1.0; 3], true), [0.0; 3]);
        let out = shade_point(&z, &z, &origin, &mat, &z, [PI; 3], true);
        // Independent scalar evaluation: (0.6/π + D·G·F/4)·π with D = 1/π,
        // G = 1, F = 0.04.
        let want = (0.6 / PI + (1.0 / PI) * 1.0 * 0.04 / 4.0) * PI;
        for c in out {
            assert!((c - want).abs() < 1e-12);
            assert!((c - 0.610).abs() < 1e-3);
        }
    }

    #[test]
    fn diffuse_hemisphere_integral_is_albedo() {
        // Midpoint rule over (cos θ, φ) with 100 × 100 cells.
        let mat = MaterialSample::new([1.0; 3], 1.0, 0.0);
        let n = vec3(0.0, 0.0, 1.0);
        let m = 100;
        let mut sum = 0.0;
        for i in 0..m {
            let mu = (i as f64 + 0.5) / m as f64;
            for j in 0..m {
                let phi = (j as f64 + 0.5) / m as f64 * 2.0 * PI;
                let l = unit(mu.acos(), phi);
                let d = eval_brdf(&n, &n, &l, &mat).diffuse[0];
                sum += d * mu * (1.0 / m as f64) * (2.0 * PI / m as f64);
            }
        }
        assert!(sum >= 0.95 && sum <= 1.0 + 1e-12, "furnace sum {sum}");
    }

    proptest! {
        #[test]
        fn reciprocity_and_non_negativity(
            nt in 0.0..FRAC_PI_2, np in 0.0..6.28f64,
            vt in 0.0..FRAC_PI_2, vp in 0.0..6.28f64,
            lt in 0.0..FRAC_PI_2, lp in 0.0..6.28f64,
            r in 0.0..1.0f64, m in 0.0..1.0f64, a in 0.0..1.0f64,
        ) {
            let n = unit(nt, np);
            let v = unit(vt, vp);
            let l = unit(lt, lp);
            let mat = MaterialSample::new([a, 0.5, 1.0 - a], r, m);
            let x = eval_brdf(&n, &v, &l, &mat);
            let y = eval_brdf(&n, &l, &v, &mat);
            for c in 0..3 {
                prop_assert!(x.diffuse[c] >= 0.0 && x.specular[c] >= 0.0);
                prop_assert!((x.diffuse[c] - y.diffuse[c]).abs() <= 1e-12 * (1.0 + x.diffuse[c]));
                prop_assert!((x.specular[c] - y.specular[c]).abs() <= 1e-9 * (1.0 + x.specular[c]));
            }
        }

        #[test]
        fn shading_is_linear_in_intensity_and_albedo(
            lx in -1.0..1.0f64, ly in -1.0..1.0f64, k in 0.1..5.0f64, a in 0.0..1.0f64,
        ) {
            let n = vec3(0.0, 0.0, 1.0);
            let v = n;
            let p = Vec3::zeros();
            let light = vec3(lx, ly, 2.0);
            let mat = MaterialSample::new([a; 3], 0.5, 0.0);
            let one = shade_point(&n, &v, &p, &mat, &light, [1.0; 3], true);
            let many = shade_point(&n, &v, &p, &mat, &light, [k; 3], true);
            prop_assert!(one.iter().all(|&c| c >= 0.0));
            prop_assert!((many[0] - k * one[0]).abs() < 1e-12 * (1.0 + many[0]));
            // Removing the specular term leaves a response linear in albedo.
            let black = MaterialSample::new([0.0; 3], 0.5, 0.0);
            let spec = shade_point(&n, &v, &p, &black, &light, [1.0; 3], true)[0];
            let unit_albedo = MaterialSample::new([1.0; 3], 0.5, 0.0);
            let full = shade_point(&n, &v, &p, &unit_albedo, &light, [1.0; 3], true)[0];
            prop_assert!(((one[0] - spec) - a * (full - spec)).abs() < 1e-12);
        }
    }
}
