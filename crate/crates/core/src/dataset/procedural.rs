//! Seeded procedural scenes: one to three signed-distance primitives with
//! constant, checker or value-noise material fields.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::brdf::MaterialSample;
use crate::math::Vec3;
use crate::render::{MaterialField, Primitive, Scene, Shape, SCENE_BOUND};

pub const ROUGHNESS_LEVELS: [f64; 3] = [0.2, 0.5, 0.8];
pub const METALLIC_LEVELS: [f64; 2] = [0.0, 1.0];

fn unit_vector(rng: &mut ChaCha8Rng) -> [f64; 3] {
    let z: f64 = rng.random_range(-1.0..1.0);
    let t: f64 = rng.random_range(0.0..TAU);
    let r = (1.0 - z * z).sqrt();
    [r * t.cos(), r * t.sin(), z]
}

fn material(rng: &mut ChaCha8Rng) -> MaterialSample {
    let albedo = std::array::from_fn(|_| rng.random_range(0.1..0.9));
    let roughness = ROUGHNESS_LEVELS[rng.random_range(0..ROUGHNESS_LEVELS.len())];
    let metallic = METALLIC_LEVELS[rng.random_range(0..METALLIC_LEVELS.len())];
    MaterialSample::new(albedo, roughness, metallic)
}

fn material_field(rng: &mut ChaCha8Rng) -> MaterialField {
    match rng.random_range(0..3) {
        0 => MaterialField::constant(material(rng)),
        1 => MaterialField::Checker {
            even: material(rng),
            odd: material(rng),
            frequency: rng.random_range(2.0..4.0),
        },
        _ => MaterialField::Noise {
            low: material(rng),
            high: material(rng),
            frequency: rng.random_range(1.5..3.0),
            seed: rng.random(),
        },
    }
}

fn shape(rng: &mut ChaCha8Rng, center: [f64; 3], size: f64) -> Shape {
    match rng.random_range(0..5) {
        0 => Shape::Sphere {
            center,
            radius: size * rng.random_range(0.7..1.0),
        },
        1 => Shape::RoundedBox {
            center,
            half_extents: std::array::from_fn(|_| size * rng.random_range(0.35..0.6)),
            rounding: size * rng.random_range(0.05..0.15),
        },
        2 => Shape::Torus {
            center,
            axis: unit_vector(rng),
            major: size * rng.random_range(0.55..0.75),
            minor: size * rng.random_range(0.2..0.3),
        },
        3 => {
            let dir = Vec3::from(unit_vector(rng)) * size * rng.random_range(0.3..0.5);
            let c = Vec3::from(center);
            Shape::Capsule {
                a: (c - dir).into(),
                b: (c + dir).into(),
                radius: size * rng.random_range(0.3..0.45),
            }
        }
        _ => Shape::DisplacedSphere {
            center,
            radius: size * rng.random_range(0.7..0.9),
            amplitude: size * rng.random_range(0.03..0.08),
            frequency: rng.random_range(3.0..6.0),
        },
    }
}

/// Shrinks `s` about the origin until it fits the scene bound.
fn fit(s: Shape) -> Shape {
    let r = s.bounding_radius();
    if r <= SCENE_BOUND {
        return s;
    }
    let k = SCENE_BOUND / r * (1.0 - 1e-9);
    let v = |a: [f64; 3]| a.map(|x| x * k);
    match s {
        Shape::Sphere { center, radius } => Shape::Sphere {
            center: v(center),
            radius: radius * k,
        },
        Shape::RoundedBox {
            center,
            half_extents,
            rounding,
        } => Shape::RoundedBox {
            center: v(center),
            half_extents: v(half_extents),
            rounding: rounding * k,
        },
        Shape::Torus {
            center,
            axis,
            major,
            minor,
        } => Shape::Torus {
            center: v(center),
            axis,
            major: major * k,
            minor: minor * k,
        },
        Shape::Capsule { a, b, radius } => Shape::Capsule {
            a: v(a),
            b: v(b),
            radius: radius * k,
        },
        Shape::DisplacedSphere {
            center,
            radius,
            amplitude,
            frequency,
        } => Shape::DisplacedSphere {
            center: v(center),
            radius: radius * k,
            amplitude: amplitude * k,
            frequency: frequency / k,
        },
    }
}

/// Deterministic scene for `seed`, always within [`SCENE_BOUND`].
pub fn generate_scene(seed: u64) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = rng.random_range(1..=3usize);
    let (offset, size) = match count {
        1 => (0.0, 1.0),
        2 => (0.55, 0.7),
        _ => (0.7, 0.55),
    };
    let mut primitives = Vec::with_capacity(count);
    let spin = rng.random_range(0.0..TAU);
    for i in 0..count {
        // Evenly spread around a tilted ring so primitives overlap little.
        let t = spin + TAU * i as f64 / count as f64;
        let lift = rng.random_range(-0.3..0.3);
        let center = if count == 1 {
            [0.0; 3]
        } else {
            [offset * t.cos(), offset * lift, offset * t.sin() * 0.6]
        };
        let s = fit(shape(&mut rng, center, size));
        primitives.push(Primitive::new(s, material_field(&mut rng)));
    }
    Scene::new(primitives)
}
