//! Seeded simulation of multi-light generator artifacts: resolution loss,
//! geometric misalignment, brightness drift, pose-label noise, image-order
//! shuffling and a heavier "mixed" pass.
//!
//! Every operation is a pure function of its inputs and seed. Per-image
//! streams are keyed on `(seed, operation, image index)`, so results do not
//! depend on thread count.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, TAU};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gbuffer::MultiLightSet;
use crate::image::ImagePlane;
use crate::rig::{wrap_angle, LightPose};
use crate::rng::hash_words;

/// Side length the resize bounds refer to.
pub const REFERENCE_SIDE: f64 = 256.0;
/// Control points per axis of the distortion lattice.
pub const GRID_POINTS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    pub trigger_probability: f64,
    pub resize_low: f64,
    pub resize_high: f64,
    pub distort_strength_low: f64,
    pub distort_strength_high: f64,
    pub brightness_low: f64,
    pub brightness_high: f64,
    pub pixel_noise_sigma: f64,
    pub input_brightness_low: f64,
    pub input_brightness_high: f64,
    pub theta_sigma: f64,
    pub phi_sigma: f64,
    pub shuffle_probability: f64,
    pub mix_probability: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            trigger_probability: 0.6,
            resize_low: 128.0,
            resize_high: 256.0,
            distort_strength_low: 0.15,
            distort_strength_high: 0.30,
            brightness_low: 0.9,
            brightness_high: 1.3,
            pixel_noise_sigma: 0.05,
            input_brightness_low: 0.9,
            input_brightness_high: 1.1,
            theta_sigma: 0.1,
            phi_sigma: 0.02,
            shuffle_probability: 0.5,
            mix_probability: 0.3,
        }
    }
}

impl AugmentConfig {
    /// Every probability zero: augmentation is the identity.
    pub fn disabled() -> Self {
        Self {
            trigger_probability: 0.0,
            shuffle_probability: 0.0,
            mix_probability: 0.0,
            ..Self::default()
        }
    }

    /// Paper magnitudes with the three artifact augmentations always on
    /// and no shuffling or mixing.
    pub fn forced() -> Self {
        Self {
            trigger_probability: 1.0,
            shuffle_probability: 0.0,
            mix_probability: 0.0,
            ..Self::default()
        }
    }

    /// The heavier pass used for data mixing: resize floor halved, every
    /// deviation from identity doubled.
    pub fn doubled(&self) -> Self {
        let widen = |low: f64, high: f64| ((1.0 - 2.0 * (1.0 - low)).max(0.0), 1.0 + 2.0 * (high - 1.0));
        let (brightness_low, brightness_high) = widen(self.brightness_low, self.brightness_high);
        let (input_brightness_low, input_brightness_high) = widen(self.input_brightness_low, self.input_brightness_high);
        Self {
            resize_low: (self.resize_low / 2.0).max(1.0),
            distort_strength_low: self.distort_strength_low * 2.0,
            distort_strength_high: self.distort_strength_high * 2.0,
            brightness_low,
            brightness_high,
            pixel_noise_sigma: self.pixel_noise_sigma * 2.0,
            input_brightness_low,
            input_brightness_high,
            theta_sigma: self.theta_sigma * 2.0,
            phi_sigma: self.phi_sigma * 2.0,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let probabilities = [
            ("trigger_probability", self.trigger_probability),
            ("shuffle_probability", self.shuffle_probability),
            ("mix_probability", self.mix_probability),
        ];
        for (name, p) in probabilities {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!("{name} = {p} is not in [0, 1]")));
            }
        }
        let ranges = [
            ("resize", self.resize_low, self.resize_high),
            ("distort_strength", self.distort_strength_low, self.distort_strength_high),
            ("brightness", self.brightness_low, self.brightness_high),
            ("input_brightness", self.input_brightness_low, self.input_brightness_high),
        ];
        for (name, low, high) in ranges {
            if !(low.is_finite() && high.is_finite() && low <= high && low >= 0.0) {
                return Err(Error::InvalidArgument(format!("{name} range [{low}, {high}] is invalid")));
            }
        }
        if self.resize_low <= 0.0 {
            return Err(Error::InvalidArgument("resize_low must be positive".into()));
        }
        for (name, s) in [
            ("pixel_noise_sigma", self.pixel_noise_sigma),
            ("theta_sigma", self.theta_sigma),
            ("phi_sigma", self.phi_sigma),
        ] {
            if !(s.is_finite() && s >= 0.0) {
                return Err(Error::InvalidArgument(format!("{name} = {s} must be >= 0")));
            }
        }
        Ok(())
    }

    /// Applies `key = value` overrides named after the fields (`_` or `-`).
    pub fn apply_overrides(&mut self, kv: &BTreeMap<String, String>) -> Result<()> {
        for (key, value) in kv {
            let v: f64 = value
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad value {value:?} for {key}")))?;
            let field = match key.replace('-', "_").as_str() {
                "trigger_probability" => &mut self.trigger_probability,
                "resize_low" => &mut self.resize_low,
                "resize_high" => &mut self.resize_high,
                "distort_strength_low" => &mut self.distort_strength_low,
                "distort_strength_high" => &mut self.distort_strength_high,
                "brightness_low" => &mut self.brightness_low,
                "brightness_high" => &mut self.brightness_high,
                "pixel_noise_sigma" => &mut self.pixel_noise_sigma,
                "input_brightness_low" => &mut self.input_brightness_low,
                "input_brightness_high" => &mut self.input_brightness_high,
                "theta_sigma" => &mut self.theta_sigma,
                "phi_sigma" => &mut self.phi_sigma,
                "shuffle_probability" => &mut self.shuffle_probability,
                "mix_probability" => &mut self.mix_probability,
                _ => return Err(Error::InvalidArgument(format!("unknown augmentation key {key:?}"))),
            };
            *field = v;
        }
        self.validate()
    }
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Resize = 1,
    Distort = 2,
    Intensity = 3,
    InputBrightness = 4,
    Orientation = 5,
    Mix = 6,
}

fn stream(seed: u64, op: Op, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(hash_words(&[seed, op as u64, index]))
}

fn uniform(rng: &mut ChaCha8Rng, low: f64, high: f64) -> f64 {
    if high > low {
        rng.random_range(low..high)
    } else {
        low
    }
}

/// Downsamples to `side`-proportional resolution and back, bilinearly.
/// `side` is measured against [`REFERENCE_SIDE`].
pub fn resize_roundtrip(img: &ImagePlane, side: f64) -> ImagePlane {
    let f = side / REFERENCE_SIDE;
    let w = ((img.width() as f64 * f).round() as usize).max(1);
    let h = ((img.height() as f64 * f).round() as usize).max(1);
    if w == img.width() && h == img.height() {
        return img.clone();
    }
    img.resize_bilinear(w, h).resize_bilinear(img.width(), img.height())
}

/// Resolution loss with side drawn from `U(resize_low, resize_high)`.
pub fn degrade_resize(img: &ImagePlane, cfg: &AugmentConfig, seed: u64) -> ImagePlane {
    let mut rng = stream(seed, Op::Resize, 0);
    let side = uniform(&mut rng, cfg.resize_low, cfg.resize_high);
    resize_roundtrip(img, side)
}

/// Warps `img` by a bilinearly interpolated displacement field whose
/// `5×5` control offsets have magnitude at most `strength` cells.
pub fn grid_distort(img: &ImagePlane, strength: f64, seed: u64) -> ImagePlane {
    if strength <= 0.0 {
        return img.clone();
    }
    let (w, h) = (img.width(), img.height());
    let cells = (GRID_POINTS - 1) as f64;
    let (cell_w, cell_h) = (w as f64 / cells, h as f64 / cells);
    let mut rng = stream(seed, Op::Distort, 0);
    let offsets: Vec<(f64, f64)> = (0..GRID_POINTS * GRID_POINTS)
        .map(|_| {
            let angle = rng.random_range(0.0..TAU);
            let radius = strength * rng.random::<f64>();
            (radius * angle.cos() * cell_w, radius * angle.sin() * cell_h)
        })
        .collect();
    let at = |gx: usize, gy: usize| offsets[gy * GRID_POINTS + gx];

    let channels = img.channels();
    let mut out = ImagePlane::zeros(w, h, channels);
    out.data_mut()
        .par_chunks_mut(w * channels)
        .enumerate()
        .for_each(|(y, row)| {
            let mut buf = [0f32; 4];
            let py = y as f64 + 0.5;
            let gy = (py / cell_h).clamp(0.0, cells);
            let gy0 = (gy.floor() as usize).min(GRID_POINTS - 2);
            let ty = gy - gy0 as f64;
            for x in 0..w {
                let px = x as f64 + 0.5;
                let gx = (px / cell_w).clamp(0.0, cells);
                let gx0 = (gx.floor() as usize).min(GRID_POINTS - 2);
                let tx = gx - gx0 as f64;
                let lerp = |a: (f64, f64), b: (f64, f64), t: f64| (a.0 + (b.0 - a.0) * t, a.1 + (b.1 - a.1) * t);
                let top = lerp(at(gx0, gy0), at(gx0 + 1, gy0), tx);
                let bottom = lerp(at(gx0, gy0 + 1), at(gx0 + 1, gy0 + 1), tx);
                let (dx, dy) = lerp(top, bottom, ty);
                img.sample_bilinear(px + dx, py + dy, &mut buf[..channels]);
                row[x * channels..(x + 1) * channels].copy_from_slice(&buf[..channels]);
            }
        });
    out
}

/// Hexcone HSV from RGB in `[0, 1]`; hue in `[0, 6)`.
pub fn rgb_to_hsv(rgb: [f64; 3]) -> [f64; 3] {
    let [r, g, b] = rgb;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let chroma = max - min;
    let hue = if chroma <= 0.0 {
        0.0
    } else if max == r {
        ((g - b) / chroma).rem_euclid(6.0)
    } else if max == g {
        (b - r) / chroma + 2.0
    } else {
        (r - g) / chroma + 4.0
    };
    let sat = if max > 0.0 { chroma / max } else { 0.0 };
    [hue, sat, max]
}

pub fn hsv_to_rgb(hsv: [f64; 3]) -> [f64; 3] {
    let [hue, sat, val] = hsv;
    let chroma = val * sat;
    let x = chroma * (1.0 - ((hue.rem_euclid(2.0)) - 1.0).abs());
    let (r, g, b) = match hue as u32 {
        0 => (chroma, x, 0.0),
        1 => (x, chroma, 0.0),
        2 => (0.0, chroma, x),
        3 => (0.0, x, chroma),
        4 => (x, 0.0, chroma),
        _ => (chroma, 0.0, x),
    };
    let m = val - chroma;
    [r + m, g + m, b + m]
}

/// Scales HSV value by `factor` times a per-pixel `N(1, sigma)` draw,
/// clamping the input to `[0, 1]` first and V after scaling.
pub fn intensity_jitter_with(img: &ImagePlane, factor: f64, sigma: f64, seed: u64) -> ImagePlane {
    let noise = (sigma > 0.0).then(|| Normal::new(1.0, sigma).expect("sigma is finite and positive"));
    let mut rng = stream(seed, Op::Intensity, 1);
    let channels = img.channels();
    let mut out = img.clone();
    for px in out.data_mut().chunks_mut(channels) {
        let scale = factor * noise.map_or(1.0, |n| n.sample(&mut rng));
        if channels >= 3 {
            let rgb = [px[0], px[1], px[2]].map(|v| (v as f64).clamp(0.0, 1.0));
            let [hue, sat, val] = rgb_to_hsv(rgb);
            let rgb = hsv_to_rgb([hue, sat, (val * scale).clamp(0.0, 1.0)]);
            for c in 0..3 {
                px[c] = rgb[c] as f32;
            }
        } else {
            for v in px.iter_mut() {
                *v = ((*v as f64).clamp(0.0, 1.0) * scale).clamp(0.0, 1.0) as f32;
            }
        }
    }
    out
}

/// Brightness drift with an image factor from `U(brightness_low,
/// brightness_high)` and per-pixel `N(1, pixel_noise_sigma)` noise.
pub fn intensity_jitter(img: &ImagePlane, cfg: &AugmentConfig, seed: u64) -> ImagePlane {
    let mut rng = stream(seed, Op::Intensity, 0);
    let factor = uniform(&mut rng, cfg.brightness_low, cfg.brightness_high);
    intensity_jitter_with(img, factor, cfg.pixel_noise_sigma, seed)
}

/// Adds fixed angle offsets to a pose: θ wraps into `[0, 2π)`, φ clamps
/// into `[0, π/2]`.
pub fn perturb_pose(pose: LightPose, d_theta: f64, d_phi: f64) -> LightPose {
    LightPose::new(wrap_angle(pose.theta + d_theta), (pose.phi + d_phi).clamp(0.0, FRAC_PI_2))
}

/// Gaussian pose-label noise with the configured sigmas.
pub fn perturb_orientation(poses: &[LightPose], cfg: &AugmentConfig, seed: u64) -> Vec<LightPose> {
    let mut rng = stream(seed, Op::Orientation, 0);
    let mut draw = |sigma: f64| {
        if sigma > 0.0 {
            Normal::new(0.0, sigma).expect("sigma is finite and positive").sample(&mut rng)
        } else {
            0.0
        }
    };
    poses
        .iter()
        .map(|&p| {
            let dt = draw(cfg.theta_sigma);
            let dp = draw(cfg.phi_sigma);
            perturb_pose(p, dt, dp)
        })
        .collect()
}

/// Which augmentations one seed selects.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentPlan {
    pub degrade: bool,
    pub intensity: bool,
    pub orientation: bool,
    /// Image order after shuffling, when shuffled.
    pub shuffle: Option<Vec<usize>>,
    pub mixed: bool,
}

impl AugmentPlan {
    pub fn draw(cfg: &AugmentConfig, seed: u64, images: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coin = |p: f64| rng.random::<f64>() < p;
        let degrade = coin(cfg.trigger_probability);
        let intensity = coin(cfg.trigger_probability);
        let orientation = coin(cfg.trigger_probability);
        let shuffled = coin(cfg.shuffle_probability);
        let mixed = coin(cfg.mix_probability);
        let shuffle = shuffled.then(|| {
            let mut order: Vec<usize> = (0..images).collect();
            order.shuffle(&mut rng);
            order
        });
        Self {
            degrade,
            intensity,
            orientation,
            shuffle,
            mixed,
        }
    }
}

/// Applies the three artifact augmentations selected by `plan`.
fn artifact_pass(mls: &MultiLightSet, cfg: &AugmentConfig, plan: &AugmentPlan, seed: u64) -> MultiLightSet {
    let images: Vec<ImagePlane> = mls
        .images
        .par_iter()
        .enumerate()
        .map(|(i, img)| {
            let key = hash_words(&[seed, i as u64]);
            let mut img = img.clone();
            if plan.degrade {
                img = degrade_resize(&img, cfg, key);
                let mut rng = stream(key, Op::Distort, 1);
                let strength = uniform(&mut rng, cfg.distort_strength_low, cfg.distort_strength_high);
                img = grid_distort(&img, strength, key);
            }
            if plan.intensity {
                img = intensity_jitter(&img, cfg, key);
            }
            img
        })
        .collect();
    let mut input = mls.input.clone();
    if plan.intensity {
        let mut rng = stream(seed, Op::InputBrightness, 0);
        let factor = uniform(&mut rng, cfg.input_brightness_low, cfg.input_brightness_high);
        input = intensity_jitter_with(&input, factor, 0.0, seed);
    }
    let poses = if plan.orientation {
        perturb_orientation(&mls.poses, cfg, seed)
    } else {
        mls.poses.clone()
    };
    MultiLightSet {
        images,
        poses,
        input,
        alpha: mls.alpha.clone(),
        depth: mls.depth.clone(),
    }
}

/// Result of [`apply_augmentations`].
#[derive(Debug, Clone, PartialEq)]
pub struct Augmented {
    pub set: MultiLightSet,
    pub plan: AugmentPlan,
}

/// Draws a plan from `seed` and applies it. A mixed draw replaces the
/// artifact pass with one at [`AugmentConfig::doubled`] strength, all three
/// augmentations on; shuffling permutes (image, pose) pairs jointly last.
pub fn apply_augmentations(mls: &MultiLightSet, cfg: &AugmentConfig, seed: u64) -> Result<Augmented> {
    cfg.validate()?;
    mls.validate()?;
    let plan = AugmentPlan::draw(cfg, seed, mls.len());
    let mut set = if plan.mixed {
        let heavy = AugmentPlan {
            degrade: true,
            intensity: true,
            orientation: true,
            shuffle: None,
            mixed: true,
        };
        artifact_pass(mls, &cfg.doubled(), &heavy, hash_words(&[seed, Op::Mix as u64]))
    } else {
        artifact_pass(mls, cfg, &plan, seed)
    };
    if let Some(order) = &plan.shuffle {
        set = set.subset(order)?;
    }
    Ok(Augmented { set, plan })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn checker(w: usize) -> ImagePlane {
        ImagePlane::from_fn(w, w, 3, |x, y| {
            let v = if (x / 4 + y / 4) % 2 == 0 { 0.9 } else { 0.1 };
            [v, v * 0.5, v * 0.25]
        })
    }

    #[test]
    fn overrides_set_fields_and_validate() {
        let kv = |pairs: &[(&str, &str)]| -> BTreeMap<String, String> {
            pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
        };
        let mut cfg = AugmentConfig::default();
        cfg.apply_overrides(&kv(&[("mix-probability", "0"), ("theta_sigma", "0.2")])).unwrap();
        assert_eq!(cfg.mix_probability, 0.0);
        assert_eq!(cfg.theta_sigma, 0.2);
        assert!(cfg.apply_overrides(&kv(&[("nope", "1")])).is_err());
        assert!(cfg.apply_overrides(&kv(&[("trigger_probability", "1.5")])).is_err());
        assert!(cfg.apply_overrides(&kv(&[("phi_sigma", "x")])).is_err());
    }

    #[test]
    fn full_side_resize_is_identity() {
        let img = checker(64);
        assert!(resize_roundtrip(&img, 256.0).max_abs_diff(&img) < 1e-6);
    }

    #[test]
    fn resize_preserves_constants() {
        let img = ImagePlane::filled(40, 40, &[0.3, 0.6, 0.9]);
        for side in [128.0, 150.0, 201.5] {
            assert!(resize_roundtrip(&img, side).max_abs_diff(&img) < 1e-6);
        }
    }

    #[test]
    fn half_resize_spreads_and_keeps_energy() {
        let mut img = ImagePlane::zeros(256, 256, 1);
        img.pixel_mut(100, 141)[0] = 1.0;
        let out = resize_roundtrip(&img, 128.0);
        let sum: f64 = out.data().iter().map(|&v| v as f64).sum();
        assert!((sum - 1.0).abs() < 0.02, "{sum}");
        let lit = out.data().iter().filter(|&&v| v > 0.0).count();
        assert!(lit >= 4);
        // Downsampling halves each axis weight; upsampling spreads with
        // tent weights (0.25, 0.75, 0.75, 0.25) per axis.
        let peak = out.data().iter().cloned().fold(0.0f32, f32::max);
        assert!((peak - 0.25 * 0.75 * 0.75).abs() < 1e-6, "{peak}");
    }

    #[test]
    fn zero_strength_distortion_is_identity() {
        let img = checker(32);
        assert_eq!(grid_distort(&img, 0.0, 5), img);
    }

    #[test]
    fn distortion_keeps_constants_and_is_reproducible() {
        let flat = ImagePlane::filled(33, 21, &[0.25, 0.5, 0.75]);
        assert!(grid_distort(&flat, 0.3, 9).max_abs_diff(&flat) < 1e-6);
        let img = checker(48);
        let a = grid_distort(&img, 0.2, 1234);
        let b = grid_distort(&img, 0.2, 1234);
        assert_eq!(a, b);
        assert!(a.max_abs_diff(&img) > 0.0);
        assert_ne!(a, grid_distort(&img, 0.2, 1235));
    }

    #[test]
    fn distortion_moves_pixels_by_bounded_amounts() {
        // A horizontal ramp reads back the source x coordinate.
        let w = 64;
        let ramp = ImagePlane::from_fn(w, w, 1, |x, _| [(x as f32 + 0.5) / w as f32; 3]);
        let strength = 0.2;
        let out = grid_distort(&ramp, strength, 77);
        let cell = w as f64 / 4.0;
        for y in 0..w {
            for x in 4..w - 4 {
                let src = out.pixel(x, y)[0] as f64 * w as f64;
                assert!((src - (x as f64 + 0.5)).abs() <= strength * cell + 1e-4);
            }
        }
    }

    #[test]
    fn hsv_round_trip() {
        for rgb in [[0.2, 0.5, 0.9], [0.9, 0.1, 0.1], [0.3, 0.3, 0.3], [0.0, 0.0, 0.0], [0.7, 0.9, 0.2]] {
            let back = hsv_to_rgb(rgb_to_hsv(rgb));
            for c in 0..3 {
                assert!((back[c] - rgb[c]).abs() < 1e-12, "{rgb:?} -> {back:?}");
            }
        }
    }

    #[test]
    fn intensity_examples() {
        let img = checker(16);
        assert!(intensity_jitter_with(&img, 1.0, 0.0, 3).max_abs_diff(&img) < 1e-6);
        let black = ImagePlane::zeros(8, 8, 3);
        assert_eq!(intensity_jitter(&black, &AugmentConfig::default(), 3), black);
        let gray = ImagePlane::filled(8, 8, &[0.5, 0.5, 0.5]);
        let out = intensity_jitter_with(&gray, 1.2, 0.0, 3);
        assert!(out.data().iter().all(|&v| (v - 0.6).abs() < 1e-6));
    }

    #[test]
    fn pose_examples() {
        let p = perturb_pose(LightPose::new(6.2, 0.5), 0.2, 0.0);
        assert!((p.theta - 0.116_81).abs() < 1e-5, "{}", p.theta);
        let q = perturb_pose(LightPose::new(1.0, 0.0), 0.0, -0.05);
        assert_eq!(q.phi, 0.0);
        let still = AugmentConfig {
            theta_sigma: 0.0,
            phi_sigma: 0.0,
            ..AugmentConfig::default()
        };
        let poses = crate::rig::light_rig_default().poses;
        assert_eq!(perturb_orientation(&poses, &still, 8), poses);
    }

    fn tiny_set(n: usize) -> MultiLightSet {
        let rig = crate::rig::light_rig_default();
        MultiLightSet {
            images: (0..n).map(|i| ImagePlane::filled(6, 6, &[0.1 * i as f32, 0.2, 0.3])).collect(),
            poses: rig.poses[..n].to_vec(),
            input: ImagePlane::filled(6, 6, &[0.4, 0.4, 0.4]),
            alpha: ImagePlane::filled(6, 6, &[1.0]),
            depth: None,
        }
    }

    #[test]
    fn disabled_config_is_identity() {
        let set = tiny_set(9);
        for seed in 0..20 {
            let out = apply_augmentations(&set, &AugmentConfig::disabled(), seed).unwrap();
            assert_eq!(out.set, set);
        }
    }

    #[test]
    fn shuffle_keeps_image_pose_pairs() {
        let set = tiny_set(9);
        let cfg = AugmentConfig {
            trigger_probability: 0.0,
            mix_probability: 0.0,
            shuffle_probability: 1.0,
            ..AugmentConfig::default()
        };
        let out = apply_augmentations(&set, &cfg, 42).unwrap();
        let order = out.plan.shuffle.clone().unwrap();
        let mut sorted = order.clone();
        sorted.sort();
        assert_eq!(sorted, (0..9).collect::<Vec<_>>());
        for (k, &i) in order.iter().enumerate() {
            assert_eq!(out.set.images[k], set.images[i]);
            assert_eq!(out.set.poses[k], set.poses[i]);
        }
    }

    #[test]
    fn augmentation_is_seed_deterministic() {
        let set = tiny_set(9);
        let cfg = AugmentConfig::default();
        for seed in [1, 42, 999] {
            assert_eq!(apply_augmentations(&set, &cfg, seed).unwrap(), apply_augmentations(&set, &cfg, seed).unwrap());
        }
    }

    #[test]
    fn trigger_frequencies_match_configuration() {
        let cfg = AugmentConfig::default();
        let trials = 10_000;
        let mut counts = [0usize; 5];
        for seed in 0..trials {
            let plan = AugmentPlan::draw(&cfg, seed, 9);
            for (k, on) in [plan.degrade, plan.intensity, plan.orientation, plan.shuffle.is_some(), plan.mixed]
                .into_iter()
                .enumerate()
            {
                counts[k] += on as usize;
            }
        }
        let expected = [0.6, 0.6, 0.6, 0.5, 0.3];
        for (k, &c) in counts.iter().enumerate() {
            let f = c as f64 / trials as f64;
            assert!((f - expected[k]).abs() <= 0.02, "augmentation {k}: {f}");
        }
    }

    proptest! {
        #[test]
        fn outputs_stay_in_range_and_poses_valid(seed in any::<u64>()) {
            let set = tiny_set(9);
            let out = apply_augmentations(&set, &AugmentConfig::default(), seed).unwrap();
            for img in &out.set.images {
                prop_assert!(img.data().iter().all(|&v| (0.0..=1.3 + 1e-6).contains(&v)));
            }
            prop_assert!(out.set.poses.iter().all(|p| p.is_valid()));
        }
    }
}
