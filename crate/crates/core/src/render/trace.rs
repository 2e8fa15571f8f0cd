//! Sphere tracing, G-buffer rasterization and point-light rendering.

use rayon::prelude::*;

use crate::brdf::{shade_point, MaterialSample};
use crate::camera::{Camera, CameraFrame};
use crate::error::Result;
use crate::gbuffer::{GBuffer, MultiLightSet};
use crate::image::ImagePlane;
use crate::math::{vec3, Vec3};
use crate::render::scene::{Scene, SCENE_BOUND};
use crate::rig::LightRig;

pub const MAX_STEPS: usize = 256;
pub const HIT_EPSILON: f64 = 1e-4;
pub const MAX_DISTANCE: f64 = 20.0;
pub const NORMAL_STEP: f64 = 1e-4;
const SHADOW_OFFSET: f64 = 2e-3;

/// Marches `origin + t·dir` for `t` in `[t_min, t_max]`; returns the hit
/// distance.
pub fn sphere_trace(scene: &Scene, origin: &Vec3, dir: &Vec3, t_min: f64, t_max: f64) -> Option<f64> {
    // Clip against the scene's bounding sphere first.
    let radius = SCENE_BOUND + 1e-2;
    let b = origin.dot(dir);
    let c = origin.norm_squared() - radius * radius;
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let root = disc.sqrt();
    let mut t = t_min.max(-b - root);
    let end = t_max.min(-b + root).min(MAX_DISTANCE);
    for _ in 0..MAX_STEPS {
        if t > end {
            return None;
        }
        let d = scene.distance(&(origin + dir * t));
        if d < HIT_EPSILON {
            return Some(t);
        }
        t += d;
    }
    None
}

/// Normalized central-difference gradient of the scene SDF.
pub fn sdf_normal(scene: &Scene, p: &Vec3) -> Vec3 {
    let h = NORMAL_STEP;
    let dx = scene.distance(&(p + vec3(h, 0.0, 0.0))) - scene.distance(&(p - vec3(h, 0.0, 0.0)));
    let dy = scene.distance(&(p + vec3(0.0, h, 0.0))) - scene.distance(&(p - vec3(0.0, h, 0.0)));
    let dz = scene.distance(&(p + vec3(0.0, 0.0, h))) - scene.distance(&(p - vec3(0.0, 0.0, h)));
    let g = vec3(dx, dy, dz);
    let len = g.norm();
    if len > 0.0 {
        g / len
    } else {
        vec3(0.0, 0.0, 1.0)
    }
}

/// Forces a camera-space normal to be front facing (z ≥ 0).
fn front_facing(n: Vec3) -> Vec3 {
    if n.z >= 0.0 {
        return n;
    }
    let flat = vec3(n.x, n.y, 0.0);
    let len = flat.norm();
    if len > 0.0 {
        flat / len
    } else {
        vec3(0.0, 0.0, 1.0)
    }
}

/// One primary-ray hit as stored in a G-buffer (single precision).
#[derive(Debug, Clone, Copy)]
pub struct SurfaceSample {
    pub depth: f32,
    pub normal: [f32; 3],
    pub albedo: [f32; 3],
    pub roughness: f32,
    pub metallic: f32,
}

impl SurfaceSample {
    pub fn material(&self) -> MaterialSample {
        MaterialSample::new(
            self.albedo.map(|a| a as f64),
            self.roughness as f64,
            self.metallic as f64,
        )
    }
}

/// World-space shading inputs rebuilt from stored (single precision)
/// G-buffer values, so that scene and G-buffer renders agree exactly.
#[derive(Debug, Clone, Copy)]
pub struct ShadingPoint {
    pub point: Vec3,
    pub normal: Vec3,
    pub view: Vec3,
}

impl ShadingPoint {
    pub fn from_stored(frame: &CameraFrame, x: usize, y: usize, depth: f32, normal_cam: [f32; 3]) -> Self {
        let dir = frame.ray_dir(x, y);
        let point = frame.origin + dir * depth as f64;
        let n_cam = vec3(normal_cam[0] as f64, normal_cam[1] as f64, normal_cam[2] as f64);
        let normal = frame.camera_to_world(&n_cam).normalize();
        Self {
            point,
            normal,
            view: -dir,
        }
    }
}

fn trace_pixel(scene: &Scene, frame: &CameraFrame, x: usize, y: usize) -> Option<SurfaceSample> {
    let dir = frame.ray_dir(x, y);
    let t = sphere_trace(scene, &frame.origin, &dir, 0.0, MAX_DISTANCE)?;
    let p = frame.origin + dir * t;
    let n_cam = front_facing(frame.world_to_camera(&sdf_normal(scene, &p)));
    let mat = scene.material_at(&p);
    Some(SurfaceSample {
        depth: t as f32,
        normal: [n_cam.x as f32, n_cam.y as f32, n_cam.z as f32],
        albedo: mat.albedo.map(|a| a as f32),
        roughness: mat.roughness as f32,
        metallic: mat.metallic as f32,
    })
}

/// Primary-ray hits for every pixel, row-major.
pub fn trace_surfaces(scene: &Scene, camera: &Camera) -> Result<Vec<Option<SurfaceSample>>> {
    let frame = camera.frame()?;
    let (w, h) = (camera.width, camera.height);
    Ok((0..w * h)
        .into_par_iter()
        .map(|i| trace_pixel(scene, &frame, i % w, i / w))
        .collect())
}

fn surfaces_to_gbuffer(hits: &[Option<SurfaceSample>], width: usize, height: usize) -> GBuffer {
    let mut gb = GBuffer::zeros(width, height);
    for (i, hit) in hits.iter().enumerate() {
        let Some(s) = hit else { continue };
        gb.alpha.data_mut()[i] = 1.0;
        gb.depth.data_mut()[i] = s.depth;
        gb.normal.data_mut()[i * 3..i * 3 + 3].copy_from_slice(&s.normal);
        gb.albedo.data_mut()[i * 3..i * 3 + 3].copy_from_slice(&s.albedo);
        gb.roughness.data_mut()[i] = s.roughness;
        gb.metallic.data_mut()[i] = s.metallic;
    }
    gb
}

fn gbuffer_surfaces(gb: &GBuffer) -> Vec<Option<SurfaceSample>> {
    (0..gb.pixel_count())
        .map(|i| {
            gb.is_foreground(i).then(|| {
                let n = &gb.normal.data()[i * 3..i * 3 + 3];
                let a = &gb.albedo.data()[i * 3..i * 3 + 3];
                SurfaceSample {
                    depth: gb.depth.data()[i],
                    normal: [n[0], n[1], n[2]],
                    albedo: [a[0], a[1], a[2]],
                    roughness: gb.roughness.data()[i],
                    metallic: gb.metallic.data()[i],
                }
            })
        })
        .collect()
}

pub fn raycast_gbuffer(scene: &Scene, camera: &Camera) -> Result<GBuffer> {
    let hits = trace_surfaces(scene, camera)?;
    Ok(surfaces_to_gbuffer(&hits, camera.width, camera.height))
}

fn is_lit(scene: &Scene, sp: &ShadingPoint, light_pos: &Vec3) -> bool {
    let origin = sp.point + sp.normal * SHADOW_OFFSET;
    let to_light = light_pos - origin;
    let dist = to_light.norm();
    sphere_trace(scene, &origin, &(to_light / dist), 0.0, dist).is_none()
}

/// Shades precomputed hits under one point light; `scene` supplies shadow
/// rays when present.
fn shade_surfaces(
    hits: &[Option<SurfaceSample>],
    frame: &CameraFrame,
    scene: Option<&Scene>,
    light_pos: &Vec3,
    intensity: [f64; 3],
) -> ImagePlane {
    let (w, h) = (frame.width(), frame.height());
    let mut data = vec![0f32; w * h * 3];
    data.par_chunks_mut(3).enumerate().for_each(|(i, px)| {
        let Some(s) = &hits[i] else { return };
        let sp = ShadingPoint::from_stored(frame, i % w, i / w, s.depth, s.normal);
        let visible = scene.is_none_or(|sc| sp.normal.dot(&(light_pos - sp.point)) <= 0.0 || is_lit(sc, &sp, light_pos));
        let rgb = shade_point(&sp.normal, &sp.view, &sp.point, &s.material(), light_pos, intensity, visible);
        for c in 0..3 {
            px[c] = rgb[c] as f32;
        }
    });
    ImagePlane::new(w, h, 3, data).expect("shaded image is finite")
}

/// Renders `scene` lit by one point light, with binary shadow rays.
pub fn render_pointlight(scene: &Scene, camera: &Camera, light_pos: &Vec3, intensity: [f64; 3]) -> Result<ImagePlane> {
    let frame = camera.frame()?;
    let hits = trace_surfaces(scene, camera)?;
    Ok(shade_surfaces(&hits, &frame, Some(scene), light_pos, intensity))
}

/// Relights a G-buffer under a point light (no occlusion).
pub fn render_pointlight_gbuffer(gb: &GBuffer, camera: &Camera, light_pos: &Vec3, intensity: [f64; 3]) -> Result<ImagePlane> {
    let frame = camera.frame()?;
    let hits = gbuffer_surfaces(gb);
    Ok(shade_surfaces(&hits, &frame, None, light_pos, intensity))
}

/// Ground-truth G-buffer plus one image per rig light. The set's `input`
/// is lit by a light at the camera; dataset generation replaces it.
pub fn render_view(scene: &Scene, camera: &Camera, rig: &LightRig) -> Result<(GBuffer, MultiLightSet)> {
    let frame = camera.frame()?;
    let hits = trace_surfaces(scene, camera)?;
    let gb = surfaces_to_gbuffer(&hits, camera.width, camera.height);
    let images = (0..rig.len())
        .map(|i| {
            let pos = rig.position(i, camera)?;
            Ok(shade_surfaces(&hits, &frame, Some(scene), &pos, rig.intensity))
        })
        .collect::<Result<Vec<_>>>()?;
    let headlight = camera.position().normalize() * rig.radius;
    let input = shade_surfaces(&hits, &frame, Some(scene), &headlight, rig.intensity);
    let mls = MultiLightSet {
        images,
        poses: rig.poses.clone(),
        input,
        alpha: gb.alpha.clone(),
        depth: Some(gb.depth.clone()),
    };
    Ok((gb, mls))
}

pub fn render_multilight(scene: &Scene, camera: &Camera, rig: &LightRig) -> Result<MultiLightSet> {
    Ok(render_view(scene, camera, rig)?.1)
}
