//! Procedural dataset generation and on-disk formats.
//!
//! Layout: `<out>/<scene>_<view>/` holds `input.png`, `light_0.png` ..
//! `light_8.png`, the G-buffer maps (`normal.png`, `albedo.png`,
//! `roughness.png`, `metallic.png`, `alpha.png`, `depth.pfm`) and
//! `sample.json` with the camera, rig and input lighting. `<out>/manifest.json`
//! lists every sample. Radiance PNGs are linear and clip at 1.

pub mod pfm;
pub mod png16;
pub mod procedural;

use std::f64::consts::{FRAC_PI_2, TAU};
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::gbuffer::{GBuffer, MultiLightSet};
use crate::image::ImagePlane;
use crate::math::{vec3, Vec3};
use crate::render::{relight_env, render_pointlight, render_view, EnvironmentMap};
use crate::rig::{light_rig_default, LightRig};
use crate::rng::hash_words;

pub use pfm::{decode_pfm, encode_pfm, read_pfm, write_pfm};
pub use png16::{read_normal_png, read_png16, write_normal_png, write_png16, write_png8};
pub use procedural::generate_scene;

pub const MANIFEST_VERSION: u32 = 1;
pub const CAMERA_DISTANCE: f64 = 4.0;
pub const CAMERA_VFOV: f64 = 0.8;
/// Environment-lit input renders use this many samples per pixel.
pub const ENV_INPUT_SPP: usize = 32;
const ENV_HEIGHT: usize = 64;

pub const MAP_FILES: [&str; 6] = [
    "normal.png",
    "albedo.png",
    "roughness.png",
    "metallic.png",
    "alpha.png",
    "depth.pfm",
];
pub const SAMPLE_META: &str = "sample.json";
pub const MANIFEST: &str = "manifest.json";

pub fn light_file(index: usize) -> String {
    format!("light_{index}.png")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

/// Scene seeds of the two splits occupy disjoint halves of `u64`: the top
/// bit is set exactly for test scenes.
pub fn scene_seed(seed: u64, split: Split, index: usize) -> u64 {
    let low = hash_words(&[seed, index as u64]) >> 1;
    match split {
        Split::Train => low,
        Split::Test => low | (1 << 63),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputLighting {
    PointLight { position: [f64; 3], intensity: [f64; 3] },
    /// Procedural sky; the sun direction is in world space (y up).
    Environment { sun_direction: [f64; 3], sun_strength: f64, samples: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleFiles {
    pub input: String,
    pub lights: Vec<String>,
    pub normal: String,
    pub albedo: String,
    pub roughness: String,
    pub metallic: String,
    pub alpha: String,
    pub depth: String,
}

impl Default for SampleFiles {
    fn default() -> Self {
        let [normal, albedo, roughness, metallic, alpha, depth] = MAP_FILES.map(String::from);
        Self {
            input: "input.png".into(),
            lights: (0..light_rig_default().len()).map(light_file).collect(),
            normal,
            albedo,
            roughness,
            metallic,
            alpha,
            depth,
        }
    }
}

/// Contents of `sample.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub scene_seed: u64,
    pub view: usize,
    pub camera: Camera,
    pub rig: LightRig,
    pub input_lighting: InputLighting,
    pub files: SampleFiles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleEntry {
    /// Sample directory relative to the dataset root.
    pub dir: String,
    #[serde(flatten)]
    pub meta: SampleMeta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: u32,
    pub seed: u64,
    pub split: Split,
    pub resolution: usize,
    pub samples: Vec<SampleEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateConfig {
    pub scenes: usize,
    pub views: usize,
    pub resolution: usize,
    pub seed: u64,
    pub split: Split,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        Self {
            scenes: 40,
            views: 2,
            resolution: 256,
            seed: 0,
            split: Split::Train,
        }
    }
}

/// View 0 faces the scene from +z; later views orbit at the same distance
/// with seeded azimuth and elevation.
pub fn view_camera(scene_seed: u64, view: usize, resolution: usize) -> Camera {
    if view == 0 {
        return Camera::front(CAMERA_DISTANCE, CAMERA_VFOV, resolution, resolution);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(hash_words(&[scene_seed, view as u64, 1]));
    let azimuth = rng.random_range(0.0..TAU);
    let elevation = rng.random_range(-0.4..0.8);
    Camera::orbit(CAMERA_DISTANCE, azimuth, elevation, CAMERA_VFOV, resolution, resolution)
}

/// Seeded input lighting: a point light in front of the camera or a sky.
pub fn input_lighting(scene_seed: u64, view: usize, camera: &Camera) -> Result<InputLighting> {
    let mut rng = ChaCha8Rng::seed_from_u64(hash_words(&[scene_seed, view as u64, 2]));
    let rig = light_rig_default();
    let azimuth = rng.random_range(0.0..TAU);
    let polar = rng.random_range(0.0..FRAC_PI_2 * 0.8);
    if rng.random_bool(0.5) {
        let frame = camera.frame()?;
        let local = vec3(polar.sin() * azimuth.cos(), polar.sin() * azimuth.sin(), polar.cos());
        let dir = frame.camera_to_world(&local);
        let position: Vec3 = dir * rig.radius;
        Ok(InputLighting::PointLight {
            position: position.into(),
            intensity: rig.intensity,
        })
    } else {
        let sun = vec3(polar.sin() * azimuth.cos(), polar.cos(), polar.sin() * azimuth.sin());
        Ok(InputLighting::Environment {
            sun_direction: sun.into(),
            sun_strength: rng.random_range(2.0..8.0),
            samples: ENV_INPUT_SPP,
            seed: rng.random(),
        })
    }
}

/// One rendered view with ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub meta: SampleMeta,
    pub gbuffer: GBuffer,
    pub lights: MultiLightSet,
}

pub fn render_sample(scene_seed: u64, view: usize, resolution: usize) -> Result<Sample> {
    let scene = generate_scene(scene_seed);
    let camera = view_camera(scene_seed, view, resolution);
    let rig = light_rig_default();
    let (gbuffer, mut lights) = render_view(&scene, &camera, &rig)?;
    let lighting = input_lighting(scene_seed, view, &camera)?;
    lights.input = match &lighting {
        InputLighting::PointLight { position, intensity } => {
            render_pointlight(&scene, &camera, &Vec3::from(*position), *intensity)?
        }
        InputLighting::Environment {
            sun_direction,
            sun_strength,
            samples,
            seed,
        } => {
            let env = EnvironmentMap::sky(ENV_HEIGHT, Vec3::from(*sun_direction), *sun_strength);
            relight_env(&gbuffer, &camera, &env, *samples, *seed)?
        }
    };
    Ok(Sample {
        meta: SampleMeta {
            scene_seed,
            view,
            camera,
            rig,
            input_lighting: lighting,
            files: SampleFiles::default(),
        },
        gbuffer,
        lights,
    })
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes `value` as pretty JSON with a trailing newline, through a
/// temporary file and rename.
pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
}

/// Writes the six G-buffer maps into `dir`.
pub fn write_gbuffer(gb: &GBuffer, dir: &Path) -> Result<()> {
    create_dir(dir)?;
    write_normal_png(&gb.normal, &dir.join(MAP_FILES[0]))?;
    write_png16(&gb.albedo, &dir.join(MAP_FILES[1]))?;
    write_png16(&gb.roughness, &dir.join(MAP_FILES[2]))?;
    write_png16(&gb.metallic, &dir.join(MAP_FILES[3]))?;
    write_png16(&gb.alpha, &dir.join(MAP_FILES[4]))?;
    write_pfm(&gb.depth, &dir.join(MAP_FILES[5]))
}

pub fn read_gbuffer(dir: &Path) -> Result<GBuffer> {
    let missing: Vec<String> = MAP_FILES
        .iter()
        .filter(|f| !dir.join(f).is_file())
        .map(|f| f.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingMaps {
            dir: dir.to_path_buf(),
            missing,
        });
    }
    let alpha = read_png16(&dir.join(MAP_FILES[4]), 1)?;
    let gb = GBuffer {
        normal: read_normal_png(&dir.join(MAP_FILES[0]), &alpha)?,
        albedo: read_png16(&dir.join(MAP_FILES[1]), 3)?,
        roughness: read_png16(&dir.join(MAP_FILES[2]), 1)?,
        metallic: read_png16(&dir.join(MAP_FILES[3]), 1)?,
        depth: read_pfm(&dir.join(MAP_FILES[5]))?,
        alpha,
    };
    gb.validate().map_err(|e| Error::format(dir, e.to_string()))?;
    Ok(gb)
}

/// Writes a sample's images, maps and `sample.json` into `dir`.
pub fn write_sample(sample: &Sample, dir: &Path) -> Result<()> {
    create_dir(dir)?;
    let files = &sample.meta.files;
    if files.lights.len() != sample.lights.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} light files for {} images",
            files.lights.len(),
            sample.lights.len()
        )));
    }
    write_png16(&sample.lights.input, &dir.join(&files.input))?;
    for (img, name) in sample.lights.images.iter().zip(&files.lights) {
        write_png16(img, &dir.join(name))?;
    }
    write_gbuffer(&sample.gbuffer, dir)?;
    write_json(&sample.meta, &dir.join(SAMPLE_META))
}

/// Reads the observation side of a sample: metadata and the multi-light
/// set (images, poses, input, alpha and depth).
pub fn read_sample(dir: &Path) -> Result<(SampleMeta, MultiLightSet)> {
    let meta: SampleMeta = read_json(&dir.join(SAMPLE_META))?;
    if meta.files.lights.len() != meta.rig.len() {
        return Err(Error::format(
            dir.join(SAMPLE_META),
            format!("{} light files for {} rig poses", meta.files.lights.len(), meta.rig.len()),
        ));
    }
    let images = meta
        .files
        .lights
        .iter()
        .map(|f| read_png16(&dir.join(f), 3))
        .collect::<Result<Vec<_>>>()?;
    let mls = MultiLightSet {
        images,
        poses: meta.rig.poses.clone(),
        input: read_png16(&dir.join(&meta.files.input), 3)?,
        alpha: read_png16(&dir.join(&meta.files.alpha), 1)?,
        depth: Some(read_pfm(&dir.join(&meta.files.depth))?),
    };
    mls.validate().map_err(|e| Error::format(dir, e.to_string()))?;
    Ok((meta, mls))
}

pub fn sample_dir_name(scene: usize, view: usize) -> String {
    format!("{scene:04}_{view}")
}

/// Renders and writes `scenes × views` samples plus `manifest.json`.
/// Samples render in parallel; the manifest is written last.
pub fn generate_dataset(cfg: &GenerateConfig, out_dir: &Path) -> Result<DatasetManifest> {
    if cfg.scenes == 0 || cfg.views == 0 || cfg.resolution == 0 {
        return Err(Error::InvalidArgument("scenes, views and resolution must be positive".into()));
    }
    create_dir(out_dir)?;
    let jobs: Vec<(usize, usize)> = (0..cfg.scenes)
        .flat_map(|s| (0..cfg.views).map(move |v| (s, v)))
        .collect();
    let samples = jobs
        .par_iter()
        .map(|&(scene, view)| {
            let seed = scene_seed(cfg.seed, cfg.split, scene);
            let sample = render_sample(seed, view, cfg.resolution)?;
            let dir = sample_dir_name(scene, view);
            write_sample(&sample, &out_dir.join(&dir))?;
            Ok(SampleEntry { dir, meta: sample.meta })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = DatasetManifest {
        version: MANIFEST_VERSION,
        seed: cfg.seed,
        split: cfg.split,
        resolution: cfg.resolution,
        samples,
    };
    write_json(&manifest, &out_dir.join(MANIFEST))?;
    Ok(manifest)
}

pub fn read_manifest(dataset: &Path) -> Result<DatasetManifest> {
    let manifest: DatasetManifest = read_json(&dataset.join(MANIFEST))?;
    if manifest.version != MANIFEST_VERSION {
        return Err(Error::format(
            dataset.join(MANIFEST),
            format!("unsupported manifest version {}", manifest.version),
        ));
    }
    Ok(manifest)
}

/// Sample directories listed in a manifest, resolved against its root.
pub fn sample_dirs(dataset: &Path, manifest: &DatasetManifest) -> Vec<PathBuf> {
    manifest.samples.iter().map(|s| dataset.join(&s.dir)).collect()
}

/// Quantizes an image the way its 16-bit PNG file stores it.
pub fn png_roundtrip(img: &ImagePlane) -> ImagePlane {
    img.map(|v| png16::dequantize(png16::quantize(v as f64)) as f32)
}
