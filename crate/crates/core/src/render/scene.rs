//! Signed-distance scenes with spatially varying materials.

use serde::{Deserialize, Serialize};

use crate::brdf::MaterialSample;
use crate::math::{vec3, Vec3};
use crate::rng::{hash_words, unit_f64};

/// Every scene must fit inside this origin-centered sphere.
pub const SCENE_BOUND: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Sphere {
        center: [f64; 3],
        radius: f64,
    },
    RoundedBox {
        center: [f64; 3],
        half_extents: [f64; 3],
        rounding: f64,
    },
    Torus {
        center: [f64; 3],
        axis: [f64; 3],
        major: f64,
        minor: f64,
    },
    Capsule {
        a: [f64; 3],
        b: [f64; 3],
        radius: f64,
    },
    /// Sphere with a `sin·sin·sin` radial displacement.
    DisplacedSphere {
        center: [f64; 3],
        radius: f64,
        amplitude: f64,
        frequency: f64,
    },
}

impl Shape {
    pub fn center(&self) -> Vec3 {
        match self {
            Shape::Sphere { center, .. }
            | Shape::RoundedBox { center, .. }
            | Shape::Torus { center, .. }
            | Shape::DisplacedSphere { center, .. } => Vec3::from(*center),
            Shape::Capsule { a, b, .. } => (Vec3::from(*a) + Vec3::from(*b)) * 0.5,
        }
    }

    /// Signed distance, or a conservative lower bound of it for the
    /// displaced sphere.
    pub fn sdf(&self, p: &Vec3) -> f64 {
        match self {
            Shape::Sphere { center, radius } => (p - Vec3::from(*center)).norm() - radius,
            Shape::RoundedBox {
                center,
                half_extents,
                rounding,
            } => {
                let q = (p - Vec3::from(*center)).abs() - Vec3::from(*half_extents);
                let outside = vec3(q.x.max(0.0), q.y.max(0.0), q.z.max(0.0)).norm();
                outside + q.x.max(q.y.max(q.z)).min(0.0) - rounding
            }
            Shape::Torus {
                center,
                axis,
                major,
                minor,
            } => {
                let d = p - Vec3::from(*center);
                let ax = Vec3::from(*axis);
                let h = d.dot(&ax);
                let radial = (d - ax * h).norm() - major;
                (radial * radial + h * h).sqrt() - minor
            }
            Shape::Capsule { a, b, radius } => {
                let a = Vec3::from(*a);
                let ab = Vec3::from(*b) - a;
                let ap = p - a;
                let t = (ap.dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
                (ap - ab * t).norm() - radius
            }
            Shape::DisplacedSphere {
                center,
                radius,
                amplitude,
                frequency,
            } => {
                let d = p - Vec3::from(*center);
                let f = *frequency;
                let disp = (f * d.x).sin() * (f * d.y).sin() * (f * d.z).sin();
                let lipschitz = 1.0 + amplitude * f * 3f64.sqrt();
                ((d.norm() - radius) - amplitude * disp) / lipschitz
            }
        }
    }

    /// Radius of an origin-centered sphere containing the shape.
    pub fn bounding_radius(&self) -> f64 {
        match self {
            Shape::Sphere { center, radius } => Vec3::from(*center).norm() + radius,
            Shape::RoundedBox {
                center,
                half_extents,
                rounding,
            } => Vec3::from(*center).norm() + Vec3::from(*half_extents).norm() + rounding,
            Shape::Torus {
                center,
                major,
                minor,
                ..
            } => Vec3::from(*center).norm() + major + minor,
            Shape::Capsule { a, b, radius } => {
                Vec3::from(*a).norm().max(Vec3::from(*b).norm()) + radius
            }
            Shape::DisplacedSphere {
                center,
                radius,
                amplitude,
                ..
            } => Vec3::from(*center).norm() + radius + amplitude,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MaterialField {
    Constant {
        material: MaterialSample,
    },
    /// 3D checkerboard in object-local coordinates with cells of size
    /// `1 / frequency`.
    Checker {
        even: MaterialSample,
        odd: MaterialSample,
        frequency: f64,
    },
    /// Albedo blends continuously with value noise; roughness and
    /// metallic switch at noise 0.5, giving piecewise-constant regions.
    Noise {
        low: MaterialSample,
        high: MaterialSample,
        frequency: f64,
        seed: u64,
    },
}

impl MaterialField {
    pub fn constant(material: MaterialSample) -> Self {
        MaterialField::Constant { material }
    }

    /// Material at an object-local position.
    pub fn eval(&self, local: &Vec3) -> MaterialSample {
        match self {
            MaterialField::Constant { material } => *material,
            MaterialField::Checker {
                even,
                odd,
                frequency,
            } => {
                if checker_parity(local, *frequency) {
                    *odd
                } else {
                    *even
                }
            }
            MaterialField::Noise {
                low,
                high,
                frequency,
                seed,
            } => {
                let t = value_noise(&(local * *frequency), *seed);
                let region = if t < 0.5 { low } else { high };
                let mut albedo = [0.0; 3];
                for c in 0..3 {
                    albedo[c] = low.albedo[c] + (high.albedo[c] - low.albedo[c]) * t;
                }
                MaterialSample::new(albedo, region.roughness, region.metallic)
            }
        }
    }

    pub fn materials(&self) -> Vec<MaterialSample> {
        match self {
            MaterialField::Constant { material } => vec![*material],
            MaterialField::Checker { even, odd, .. } => vec![*even, *odd],
            MaterialField::Noise { low, high, .. } => vec![*low, *high],
        }
    }
}

/// True for "odd" checker cells.
pub fn checker_parity(local: &Vec3, frequency: f64) -> bool {
    let s = (local.x * frequency).floor() + (local.y * frequency).floor() + (local.z * frequency).floor();
    (s as i64).rem_euclid(2) == 1
}

fn lattice(seed: u64, x: i64, y: i64, z: i64) -> f64 {
    unit_f64(hash_words(&[seed, x as u64, y as u64, z as u64]))
}

/// Trilinear value noise with smoothstep fade, in `[0, 1]`.
pub fn value_noise(p: &Vec3, seed: u64) -> f64 {
    let base = p.map(f64::floor);
    let f = p - base;
    let fade = f.map(|t| t * t * (3.0 - 2.0 * t));
    let (ix, iy, iz) = (base.x as i64, base.y as i64, base.z as i64);
    let mut acc = 0.0;
    for dz in 0..2 {
        for dy in 0..2 {
            for dx in 0..2 {
                let w = (if dx == 1 { fade.x } else { 1.0 - fade.x })
                    * (if dy == 1 { fade.y } else { 1.0 - fade.y })
                    * (if dz == 1 { fade.z } else { 1.0 - fade.z });
                acc += w * lattice(seed, ix + dx, iy + dy, iz + dz);
            }
        }
    }
    acc.clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Primitive {
    pub shape: Shape,
    pub material: MaterialField,
}

impl Primitive {
    pub fn new(shape: Shape, material: MaterialField) -> Self {
        Self { shape, material }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Scene {
    pub primitives: Vec<Primitive>,
}

impl Scene {
    pub fn new(primitives: Vec<Primitive>) -> Self {
        Self { primitives }
    }

    pub fn single(shape: Shape, material: MaterialField) -> Self {
        Self::new(vec![Primitive::new(shape, material)])
    }

    /// Union distance and the index of the closest primitive.
    #[inline]
    pub fn sdf(&self, p: &Vec3) -> (f64, usize) {
        let mut best = (f64::INFINITY, 0);
        for (i, prim) in self.primitives.iter().enumerate() {
            let d = prim.shape.sdf(p);
            if d < best.0 {
                best = (d, i);
            }
        }
        best
    }

    #[inline]
    pub fn distance(&self, p: &Vec3) -> f64 {
        self.sdf(p).0
    }

    pub fn material_at(&self, p: &Vec3) -> MaterialSample {
        let (_, i) = self.sdf(p);
        let prim = &self.primitives[i];
        prim.material.eval(&(p - prim.shape.center())).clamped()
    }

    pub fn bounding_radius(&self) -> f64 {
        self.primitives
            .iter()
            .map(|p| p.shape.bounding_radius())
            .fold(0.0, f64::max)
    }

    /// Bounding-sphere and material-range invariants.
    pub fn is_valid(&self) -> bool {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        !self.primitives.is_empty()
            && self.bounding_radius() <= SCENE_BOUND + 1e-9
            && self.primitives.iter().all(|p| {
                p.material.materials().iter().all(|m| {
                    m.albedo.iter().all(|&a| unit(a)) && unit(m.roughness) && unit(m.metallic)
                })
            })
    }
}
