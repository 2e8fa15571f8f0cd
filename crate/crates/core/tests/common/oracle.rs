//! Test-side forward model written from the reflectance formulas directly,
//! sharing no code with the library's shading path.

#![allow(dead_code)]

use std::f64::consts::PI;

pub type V3 = [f64; 3];

pub fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn sub(a: V3, b: V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn add(a: V3, b: V3) -> V3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn scale(a: V3, s: f64) -> V3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn unit(a: V3) -> V3 {
    scale(a, 1.0 / dot(a, a).sqrt())
}

/// Radiance from a point light of per-channel intensity `e` at `light`,
/// seen from direction `view` (unit, toward the eye) at `point` with normal
/// `n`: GGX distribution, Schlick-GGX visibility with k = α/2, Schlick
/// Fresnel, metallic-roughness albedo split.
pub fn radiance(n: V3, view: V3, point: V3, light: V3, e: V3, albedo: V3, roughness: f64, metallic: f64) -> V3 {
    let d = sub(light, point);
    let dist2 = dot(d, d);
    let l = scale(d, 1.0 / dist2.sqrt());
    let nl = dot(n, l);
    if nl <= 0.0 {
        return [0.0; 3];
    }
    let alpha = (roughness * roughness).max(1e-3);
    let h = unit(add(l, view));
    let nh = dot(n, h).clamp(0.0, 1.0);
    let nv = dot(n, view).clamp(0.0, 1.0);
    let vh = dot(view, h).clamp(0.0, 1.0);
    let nl = nl.min(1.0);
    let a2 = alpha * alpha;
    let t = nh * nh * (a2 - 1.0) + 1.0;
    let ndf = a2 / (PI * t * t);
    let k = alpha / 2.0;
    let vis = (nv / (nv * (1.0 - k) + k)) * (nl / (nl * (1.0 - k) + k));
    let spec_base = ndf * vis / (4.0 * nv * nl).max(1e-6);
    let w = (1.0 - vh).powi(5);
    let mut out = [0.0; 3];
    for c in 0..3 {
        let f0 = 0.04 * (1.0 - metallic) + albedo[c] * metallic;
        let fresnel = f0 + (1.0 - f0) * w;
        let brdf = albedo[c] * (1.0 - metallic) / PI + fresnel * spec_base;
        out[c] = brdf * nl / dist2 * e[c];
    }
    out
}
