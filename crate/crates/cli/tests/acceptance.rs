//! Acceptance suite: one test per criterion, each printing a single
//! PASS/FAIL line to stderr (uncaptured) before asserting.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::process::Command;
use std::sync::{Mutex, OnceLock};
use std::time::Instant;

use common::jacobian::jacobian_relative_error;
use lightrig_cli::ablation::subset_for;
use lightrig_core::augment::{apply_augmentations, AugmentConfig};
use lightrig_core::dataset::{
    generate_scene, read_gbuffer, read_pfm, render_sample, scene_seed, write_gbuffer, write_pfm, Split,
};
use lightrig_core::math::vec3;
use lightrig_core::metrics::{
    angular_error_stats, angular_errors, held_out_pose, image_metrics, masked_ssim, normal_loss, psnr_from_mse,
    NORMAL_LOSS_LAMBDA,
};
use lightrig_core::render::{
    relight_env_split, render_pointlight, render_pointlight_gbuffer, render_view, tonemap_srgb, EnvironmentMap,
    MaterialField, Scene, Shape,
};
use lightrig_core::rig::pose_position;
use lightrig_core::{light_rig_default, solve_gbuffer, Camera, GBuffer, ImagePlane, MaterialSample, SolverConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria run one at a time so the timed ones measure a single worker.
static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn verdict(id: u32, name: &str, pass: bool, detail: &str) -> bool {
    let line = format!(
        "acceptance {id:>2} {name}: {} ({detail})\n",
        if pass { "PASS" } else { "FAIL" }
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
    pass
}

fn single_worker<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(f)
}

fn sphere(mat: MaterialField) -> Scene {
    Scene::single(Shape::Sphere { center: [0.0; 3], radius: 1.0 }, mat)
}

fn scalar_rmse(pred: &ImagePlane, gt: &ImagePlane, mask: &[bool]) -> f64 {
    image_metrics(pred, gt, mask).unwrap().rmse
}

#[test]
fn criterion_01_photometric_stereo_exactness() {
    let _g = serial();
    let camera = Camera::front(4.0, 0.8, 256, 256);
    let rig = light_rig_default();
    let mat = MaterialSample::new([0.7, 0.5, 0.3], 1.0, 0.0);
    let (gt, mls) = render_view(&sphere(MaterialField::constant(mat)), &camera, &rig).unwrap();
    let t = Instant::now();
    let (gb, _) = single_worker(|| solve_gbuffer(&mls.input, &mls, &camera, &rig, &SolverConfig::default()).unwrap());
    let secs = t.elapsed().as_secs_f64();
    let mask = gt.mask();
    let angle = angular_error_stats(&gb.normal, &gt.normal, &mask).unwrap().mean_deg;
    let albedo = scalar_rmse(&gb.albedo, &gt.albedo, &mask);
    let pass = angle < 0.5 && albedo < 0.01 && secs < 60.0;
    assert!(verdict(
        1,
        "photometric-stereo exactness",
        pass,
        &format!("mean angle {angle:.4} deg < 0.5, albedo RMSE {albedo:.5} < 0.01, {secs:.1} s < 60 s on one worker")
    ));
}

#[test]
fn criterion_02_full_brdf_recovery() {
    let _g = serial();
    let camera = Camera::front(4.0, 0.8, 64, 64);
    let rig = light_rig_default();
    let (mut angles, mut rough_sq, mut metal_sq, mut n) = (Vec::new(), 0.0, 0.0, 0usize);
    for roughness in [0.2, 0.5, 0.8] {
        let field = MaterialField::Checker {
            even: MaterialSample::new([0.75, 0.55, 0.35], roughness, 0.0),
            odd: MaterialSample::new([0.9, 0.7, 0.5], roughness, 1.0),
            frequency: 2.0,
        };
        let (gt, mls) = render_view(&sphere(field), &camera, &rig).unwrap();
        let (gb, _) = solve_gbuffer(&mls.input, &mls, &camera, &rig, &SolverConfig::default()).unwrap();
        let mask = gt.mask();
        angles.extend(angular_errors(&gb.normal, &gt.normal, &mask).unwrap());
        for i in (0..mask.len()).filter(|&i| mask[i]) {
            rough_sq += (gb.roughness.scalar_at(i) - gt.roughness.scalar_at(i)).powi(2);
            metal_sq += (gb.metallic.scalar_at(i) - gt.metallic.scalar_at(i)).powi(2);
            n += 1;
        }
    }
    let angle = angles.iter().sum::<f64>() / angles.len() as f64;
    let (rough, metal) = ((rough_sq / n as f64).sqrt(), (metal_sq / n as f64).sqrt());
    let pass = angle < 2.0 && rough < 0.05 && metal < 0.05;
    assert!(verdict(
        2,
        "full-BRDF recovery",
        pass,
        &format!("mean angle {angle:.3} deg < 2, roughness RMSE {rough:.4} < 0.05, metallic RMSE {metal:.4} < 0.05")
    ));
}

const SCENES: usize = 20;
const BENCH_RES: usize = 64;
const COUNTS: [usize; 4] = [1, 3, 6, 9];

/// Per-scene results of the light-count sweep on the held-out benchmark.
struct Bench {
    /// `[count][scene]` mean angular error and albedo RMSE.
    angle: Vec<Vec<f64>>,
    albedo: Vec<Vec<f64>>,
    /// Held-out-light relighting PSNR per scene (L = 9).
    relight_psnr: Vec<f64>,
    seconds: f64,
}

fn bench() -> &'static Bench {
    static BENCH: OnceLock<Bench> = OnceLock::new();
    BENCH.get_or_init(|| {
        let t = Instant::now();
        let cfg = SolverConfig::default();
        let mut angle = vec![Vec::new(); COUNTS.len()];
        let mut albedo = vec![Vec::new(); COUNTS.len()];
        let mut relight_psnr = Vec::new();
        for s in 0..SCENES {
            let seed = scene_seed(0, Split::Test, s);
            let sample = render_sample(seed, 0, BENCH_RES).unwrap();
            let (cam, rig, gt) = (&sample.meta.camera, &sample.meta.rig, &sample.gbuffer);
            let mask = gt.mask();
            for (k, &count) in COUNTS.iter().enumerate() {
                let sub = sample.lights.subset(&subset_for(count, rig.len()).unwrap()).unwrap();
                let (gb, _) = solve_gbuffer(&sample.lights.input, &sub, cam, rig, &cfg).unwrap();
                angle[k].push(angular_error_stats(&gb.normal, &gt.normal, &mask).unwrap().mean_deg);
                albedo[k].push(scalar_rmse(&gb.albedo, &gt.albedo, &mask));
                if count == 9 {
                    relight_psnr.push(held_out_psnr(&generate_scene(seed), &gb, gt, cam, rig));
                }
            }
        }
        Bench {
            angle,
            albedo,
            relight_psnr,
            seconds: t.elapsed().as_secs_f64(),
        }
    })
}

/// sRGB PSNR of the G-buffer relit by the held-out light against the direct
/// render, over foreground pixels that light reaches. G-buffer relighting has
/// no occlusion, so pixels in the held-out light's cast shadows are excluded:
/// a pixel counts when the direct render is lit or the unoccluded shading of
/// the ground truth is dark as well.
fn held_out_psnr(
    scene: &Scene,
    pred: &GBuffer,
    gt: &GBuffer,
    cam: &Camera,
    rig: &lightrig_core::LightRig,
) -> f64 {
    let pos = pose_position(held_out_pose(), rig.radius, cam).unwrap();
    let direct = render_pointlight(scene, cam, &pos, rig.intensity).unwrap();
    let relit = render_pointlight_gbuffer(pred, cam, &pos, rig.intensity).unwrap();
    let unoccluded = render_pointlight_gbuffer(gt, cam, &pos, rig.intensity).unwrap();
    let mask = gt.mask();
    let reached: Vec<bool> = (0..mask.len())
        .map(|i| {
            let lit = direct.rgb_at(i).iter().any(|&v| v > 0.0);
            let dark = unoccluded.rgb_at(i).iter().all(|&v| v == 0.0);
            mask[i] && (lit || dark)
        })
        .collect();
    image_metrics(&tonemap_srgb(&relit), &tonemap_srgb(&direct), &reached).unwrap().psnr
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

#[test]
fn criterion_03_light_count_trend() {
    let _g = serial();
    let b = bench();
    let angle: Vec<f64> = b.angle.iter().map(|v| mean(v)).collect();
    let albedo: Vec<f64> = b.albedo.iter().map(|v| mean(v)).collect();
    let decreasing = |v: &[f64]| v[1] > v[2] && v[2] > v[3];
    let pass = decreasing(&angle) && decreasing(&albedo) && angle[0] >= 5.0 * angle[3] && b.seconds < 900.0;
    assert!(verdict(
        3,
        "light-count trend",
        pass,
        &format!(
            "mean angle L=1/3/6/9 {:.2}/{:.2}/{:.2}/{:.3} deg, albedo RMSE {:.3}/{:.3}/{:.4}/{:.4}, {SCENES} scenes at {BENCH_RES}px in {:.0} s < 900 s",
            angle[0], angle[1], angle[2], angle[3], albedo[0], albedo[1], albedo[2], albedo[3], b.seconds
        )
    ));
}

#[test]
fn criterion_04_relighting_round_trip() {
    let _g = serial();
    let psnr = &bench().relight_psnr;
    let above = psnr.iter().filter(|&&p| p > 35.0).count();
    let worst = psnr.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(verdict(
        4,
        "relighting round trip",
        above >= 18,
        &format!("{above}/{SCENES} scenes above 35 dB (need 18), worst {worst:.2} dB")
    ));
}

#[test]
fn criterion_05_uniform_environment() {
    let _g = serial();
    let size = 8;
    let albedo = [0.8, 0.5, 0.2];
    let camera = Camera::front(4.0, 0.2, size, size);
    let frame = camera.frame().unwrap();
    let mut gb = GBuffer::zeros(size, size);
    for i in 0..size * size {
        gb.alpha.data_mut()[i] = 1.0;
        gb.set_normal(i, &vec3(0.0, 0.0, 1.0));
        gb.set_albedo(i, albedo);
        gb.roughness.data_mut()[i] = 0.6;
        // Flat probe in the z = 0 plane.
        let d = frame.ray_dir(i % size, i / size);
        gb.depth.data_mut()[i] = (4.0 / -d.z) as f32;
    }
    let env = EnvironmentMap::uniform(16, [1.0; 3]);
    let (diffuse, _) = relight_env_split(&gb, &camera, &env, 4096, 0).unwrap();
    let worst = (0..size * size)
        .flat_map(|i| {
            let d = diffuse.rgb_at(i);
            (0..3).map(move |c| ((d[c] - albedo[c]) / albedo[c]).abs())
        })
        .fold(0.0, f64::max);
    assert!(verdict(
        5,
        "uniform-environment diffuse",
        worst < 0.01,
        &format!("worst relative deviation from albedo {:.3}% < 1% at 4096 spp", 100.0 * worst)
    ));
}

#[test]
fn criterion_06_augmentation_robustness() {
    let _g = serial();
    let camera = Camera::front(4.0, 0.8, 128, 128);
    let rig = light_rig_default();
    let mat = MaterialSample::new([0.7, 0.5, 0.3], 1.0, 0.0);
    let (gt, mls) = render_view(&sphere(MaterialField::constant(mat)), &camera, &rig).unwrap();
    let aug = apply_augmentations(&mls, &AugmentConfig::forced(), 42).unwrap();
    let mask = gt.mask();
    let err = |cfg: &SolverConfig| {
        let (gb, _) = solve_gbuffer(&aug.set.input, &aug.set, &camera, &rig, cfg).unwrap();
        angular_error_stats(&gb.normal, &gt.normal, &mask).unwrap().mean_deg
    };
    let (plain, huber) = (err(&SolverConfig::default()), err(&SolverConfig::huber()));
    let pass = huber < 10.0 && huber < plain;
    assert!(verdict(
        6,
        "augmentation robustness",
        pass,
        &format!("Huber mean angle {huber:.3} deg (bound 10), non-robust {plain:.3} deg")
    ));
}

#[test]
fn criterion_07_metric_units() {
    let _g = serial();
    let psnr = psnr_from_mse(0.01);
    let plus = ImagePlane::filled(4, 4, &[0.0, 0.0, 1.0]);
    let minus = ImagePlane::filled(4, 4, &[0.0, 0.0, -1.0]);
    let all = vec![true; 16];
    let antipodal = normal_loss(&plus, &minus, &all, NORMAL_LOSS_LAMBDA).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let img = ImagePlane::from_fn(12, 9, 3, |_, _| [rng.random(), rng.random(), rng.random()]);
    let ssim = masked_ssim(&img, &img, &vec![true; 12 * 9]).unwrap();
    let mut monotone = 0;
    for _ in 0..1000 {
        let (w, h) = (rng.random_range(1..9), rng.random_range(1..9));
        let mut unit_map = || {
            ImagePlane::from_fn(w, h, 3, |_, _| {
                let v = [rng.random_range(-1.0f32..1.0), rng.random_range(-1.0..1.0), rng.random_range(0.05..1.0)];
                let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                [v[0] / n, v[1] / n, v[2] / n]
            })
        };
        let (pred, gt) = (unit_map(), unit_map());
        let acc = angular_error_stats(&pred, &gt, &vec![true; w * h]).unwrap().accuracy;
        monotone += usize::from(acc.windows(2).all(|p| p[0] <= p[1]));
    }
    let pass = psnr == 20.0 && antipodal == 3.0 && ssim == 1.0 && monotone == 1000;
    assert!(verdict(
        7,
        "metric units",
        pass,
        &format!("PSNR(0.01) = {psnr}, antipodal normal loss = {antipodal}, SSIM identity = {ssim}, accuracy monotone {monotone}/1000")
    ));
}

fn lightrig(threads: usize, args: &[&str]) {
    let status = Command::new(env!("CARGO_BIN_EXE_lightrig"))
        .arg(format!("--threads={threads}"))
        .args(args)
        .env("RUST_LOG", "warn")
        .status()
        .unwrap();
    assert!(status.success(), "lightrig {args:?} with {threads} threads: {status}");
}

/// Every file under `dir` with its bytes, in path order.
fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().to_string();
                out.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn criterion_08_determinism_across_workers() {
    let _g = serial();
    let tmp = tempfile::tempdir().unwrap();
    let mut runs = Vec::new();
    for threads in [1, 4, 16] {
        let root = tmp.path().join(format!("t{threads}"));
        let s = |p: &str| root.join(p).to_string_lossy().to_string();
        lightrig(threads, &["gen", "--out", &s("ds"), "--scenes", "3", "--views", "1", "--res", "24", "--seed", "5", "--split", "test"]);
        lightrig(threads, &["solve", "--sample", &s("ds/0000_0"), "--out", &s("pred")]);
        lightrig(threads, &["relight", "--gbuffer", &s("pred"), "--spp", "8", "--seed", "3", "--out", &s("relit/out.png")]);
        lightrig(threads, &["ablate", "--dataset", &s("ds"), "--report", &s("ablate/report.json")]);
        runs.push(tree(&root));
    }
    let files = runs[0].len();
    let identical = runs.iter().all(|r| *r == runs[0]);
    assert!(verdict(
        8,
        "determinism",
        identical && files > 0,
        &format!("gen/solve/relight/ablate outputs ({files} files) byte-identical at 1, 4 and 16 workers: {identical}")
    ));
}

#[test]
fn criterion_09_gradient_check() {
    let _g = serial();
    let worst = (0..100).map(jacobian_relative_error).fold(0.0, f64::max);
    assert!(verdict(
        9,
        "gradient check",
        worst < 1e-3,
        &format!("worst relative Jacobian error {worst:.2e} < 1e-3 over 100 interior points")
    ));
}

#[test]
fn criterion_10_format_round_trips() {
    let _g = serial();
    let tmp = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let img = ImagePlane::from_fn(7, 5, 3, |_, _| {
        [rng.random_range(-1e4..1e4), rng.random::<f32>() * 1e-30, f32::MAX * rng.random::<f32>()]
    });
    let path = tmp.path().join("x.pfm");
    write_pfm(&img, &path).unwrap();
    let back = read_pfm(&path).unwrap();
    let bits = |i: &ImagePlane| i.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    let pfm_exact = bits(&back) == bits(&img) && back.width() == 7 && back.height() == 5;

    let sample = render_sample(scene_seed(9, Split::Train, 0), 0, 64).unwrap();
    let gt = &sample.gbuffer;
    write_gbuffer(gt, tmp.path()).unwrap();
    let gb = read_gbuffer(tmp.path()).unwrap();
    let worst = angular_errors(&gb.normal, &gt.normal, &gt.mask()).unwrap().into_iter().fold(0.0, f64::max);
    let bound = 0.5 / 65535.0 + 1e-7;
    let maps_ok = [(&gb.albedo, &gt.albedo), (&gb.roughness, &gt.roughness), (&gb.metallic, &gt.metallic)]
        .iter()
        .all(|(a, b)| f64::from(a.max_abs_diff(b)) <= bound)
        && bits(&gb.depth) == bits(&gt.depth);
    let pass = pfm_exact && worst < 0.01 && maps_ok;
    assert!(verdict(
        10,
        "format round trips",
        pass,
        &format!("PFM bit-exact {pfm_exact}, worst 16-bit normal deviation {worst:.5} deg < 0.01, material maps within half a step {maps_ok}")
    ));
}
