use std::fs;
use std::path::{Path, PathBuf};

use lightrig_core::augment::{apply_augmentations, AugmentConfig, AugmentPlan};
use lightrig_core::dataset::{
    generate_dataset, read_gbuffer, read_json, read_pfm, read_sample, write_json, write_pfm, write_png16, write_png8,
    write_gbuffer, GenerateConfig, SampleFiles, SampleMeta, Split, MAP_FILES, SAMPLE_META,
};
use lightrig_core::metrics::{eval_report, held_out_pose, relight_pair};
use lightrig_core::render::{relight_env, tonemap_srgb, EnvironmentMap};
use lightrig_core::{solve_gbuffer, Camera, LightRig, SolverConfig, SolverReport};
use log::info;
use serde::{Deserialize, Serialize};

use crate::ablation::{format_table, run_ablation};
use crate::args::{AblateArgs, AugmentArgs, Cli, Command, EvalArgs, GenArgs, RelightArgs, RobustArg, SolveArgs, SplitArg};
use crate::config::parse_sets;
use crate::CliError;

/// Written by `solve` next to the maps so the directory can be relit and
/// evaluated on its own.
pub const VIEW_FILE: &str = "camera.json";
pub const SOLVE_REPORT: &str = "report.json";
pub const AUGMENT_FILE: &str = "augment.json";

/// Radiance PNGs clip at 1, so observations there are excluded.
const FILE_SATURATION: f64 = 1.0;
const SKY_HEIGHT: usize = 64;
const SKY_SUN: [f64; 3] = [0.3, 0.8, 0.5];
const SKY_SUN_STRENGTH: f64 = 4.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ViewFile {
    pub camera: Camera,
    pub rig: LightRig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveRecord {
    pub lights: Vec<usize>,
    pub config: SolverConfig,
    pub report: SolverReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AugmentRecord {
    pub seed: u64,
    pub config: AugmentConfig,
    pub plan: AugmentPlan,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Gen(a) => gen(a),
        Command::Solve(a) => solve(a),
        Command::Relight(a) => relight(a),
        Command::Eval(a) => eval(a),
        Command::Ablate(a) => ablate(a),
        Command::Augment(a) => augment(a),
    }
}

fn gen(a: GenArgs) -> Result<(), CliError> {
    let cfg = GenerateConfig {
        scenes: a.scenes,
        views: a.views,
        resolution: a.res,
        seed: a.seed,
        split: match a.split {
            SplitArg::Train => Split::Train,
            SplitArg::Test => Split::Test,
        },
    };
    let manifest = generate_dataset(&cfg, &a.out)?;
    info!("wrote {} samples to {}", manifest.samples.len(), a.out.display());
    Ok(())
}

fn solver_config(robust: RobustArg, sets: &[String]) -> Result<SolverConfig, CliError> {
    let mut cfg = match robust {
        RobustArg::None => SolverConfig::default(),
        RobustArg::Huber => SolverConfig::huber(),
    };
    cfg.saturation_level = Some(FILE_SATURATION);
    cfg.apply_overrides(&parse_sets(sets)?)?;
    Ok(cfg)
}

fn solve(a: SolveArgs) -> Result<(), CliError> {
    let (meta, mls) = read_sample(&a.sample)?;
    let lights = a.lights.unwrap_or_else(|| (0..mls.len()).collect());
    if lights.is_empty() {
        return Err(CliError::usage("--lights lists no light"));
    }
    let robust = a.robust.unwrap_or(if a.sample.join(AUGMENT_FILE).is_file() {
        RobustArg::Huber
    } else {
        RobustArg::None
    });
    let cfg = solver_config(robust, &a.set)?;
    let sub = mls.subset(&lights)?;
    let (gb, report) = solve_gbuffer(&mls.input, &sub, &meta.camera, &meta.rig, &cfg)?;
    info!(
        "solved {} foreground pixels ({} converged, {} invalid) in {:.1}s",
        report.foreground, report.converged, report.invalid, report.wall_time_s
    );
    write_gbuffer(&gb, &a.out)?;
    write_json(
        &ViewFile {
            camera: meta.camera.clone(),
            rig: meta.rig.clone(),
        },
        &a.out.join(VIEW_FILE),
    )?;
    let entirely_invalid = report.entirely_invalid();
    write_json(&SolveRecord { lights, config: cfg, report }, &a.out.join(SOLVE_REPORT))?;
    if entirely_invalid {
        return Err(CliError::numerical(format!(
            "{}: no foreground pixel could be initialized",
            a.sample.display()
        )));
    }
    Ok(())
}

/// Camera and rig of a G-buffer directory: `camera.json` from `solve`, or
/// `sample.json` from `gen`.
fn read_view(dir: &Path) -> Result<ViewFile, CliError> {
    for name in [VIEW_FILE, SAMPLE_META] {
        let path = dir.join(name);
        if path.is_file() {
            return Ok(read_json::<ViewFile>(&path)?);
        }
    }
    Err(CliError::data(format!(
        "{}: neither {VIEW_FILE} nor {SAMPLE_META} found",
        dir.display()
    )))
}

fn relight(a: RelightArgs) -> Result<(), CliError> {
    let gb = read_gbuffer(&a.gbuffer)?;
    let view = read_view(&a.gbuffer)?;
    let env = match &a.env {
        Some(path) => EnvironmentMap::new(read_pfm(path)?)?,
        None => EnvironmentMap::sky(SKY_HEIGHT, SKY_SUN.into(), SKY_SUN_STRENGTH),
    };
    let linear = relight_env(&gb, &view.camera, &env, a.spp, a.seed)?;
    ensure_parent(&a.out)?;
    write_png8(&tonemap_srgb(&linear), &a.out)?;
    let pfm = linear_path(&a.out);
    write_pfm(&linear, &pfm)?;
    info!("wrote {} and {}", a.out.display(), pfm.display());
    Ok(())
}

fn ensure_parent(path: &Path) -> Result<(), CliError> {
    match path.parent().filter(|p| !p.as_os_str().is_empty()) {
        Some(parent) => fs::create_dir_all(parent).map_err(|e| CliError::data(format!("{}: {e}", parent.display()))),
        None => Ok(()),
    }
}

/// `out.png` -> `out.pfm`.
pub fn linear_path(out: &Path) -> PathBuf {
    out.with_extension("pfm")
}

fn eval(a: EvalArgs) -> Result<(), CliError> {
    let pred = read_gbuffer(&a.pred)?;
    let gt = read_gbuffer(&a.gt)?;
    if pred.width() != gt.width() || pred.height() != gt.height() {
        return Err(CliError::data(format!(
            "prediction is {}x{} but ground truth is {}x{}",
            pred.width(),
            pred.height(),
            gt.width(),
            gt.height()
        )));
    }
    let view = read_view(&a.gt).or_else(|_| read_view(&a.pred))?;
    let pair = relight_pair(&pred, &gt, &view.camera, &view.rig, held_out_pose())?;
    let report = eval_report(&pred, &gt, &[pair])?;
    ensure_parent(&a.report)?;
    write_json(&report, &a.report)?;
    println!(
        "normal mean {:.3}° median {:.3}° | albedo {:.2} dB | relight {:.2} dB",
        report.normal.mean_deg,
        report.normal.median_deg,
        report.albedo.psnr,
        report.relight.as_ref().map_or(f64::NAN, |r| r.psnr)
    );
    Ok(())
}

fn ablate(a: AblateArgs) -> Result<(), CliError> {
    let cfg = solver_config(a.robust, &a.set)?;
    let result = run_ablation(&a.dataset, &a.counts, &cfg)?;
    ensure_parent(&a.report)?;
    write_json(&result, &a.report)?;
    let table = format_table(&result);
    let text = a.report.with_extension("txt");
    fs::write(&text, &table).map_err(|e| CliError::data(format!("{}: {e}", text.display())))?;
    print!("{table}");
    Ok(())
}

fn augment(a: AugmentArgs) -> Result<(), CliError> {
    let mut cfg = AugmentConfig::default();
    cfg.apply_overrides(&parse_sets(&a.set)?)?;
    let (meta, mls) = read_sample(&a.sample)?;
    let aug = apply_augmentations(&mls, &cfg, a.seed)?;
    fs::create_dir_all(&a.out).map_err(|e| CliError::data(format!("{}: {e}", a.out.display())))?;

    let files = SampleFiles {
        lights: (0..aug.set.len()).map(lightrig_core::dataset::light_file).collect(),
        ..SampleFiles::default()
    };
    write_png16(&aug.set.input, &a.out.join(&files.input))?;
    for (img, name) in aug.set.images.iter().zip(&files.lights) {
        write_png16(img, &a.out.join(name))?;
    }
    // Ground-truth maps are copied byte for byte.
    for (name, src) in MAP_FILES.iter().zip(source_maps(&meta.files)) {
        let from = a.sample.join(src);
        let to = a.out.join(name);
        fs::copy(&from, &to).map_err(|e| CliError::data(format!("{}: {e}", from.display())))?;
    }
    let mut rig = meta.rig.clone();
    rig.poses = aug.set.poses.clone();
    let out_meta = SampleMeta { rig, files, ..meta };
    write_json(&out_meta, &a.out.join(SAMPLE_META))?;
    write_json(
        &AugmentRecord {
            seed: a.seed,
            config: cfg,
            plan: aug.plan.clone(),
        },
        &a.out.join(AUGMENT_FILE),
    )?;
    info!("augmented sample written to {} ({:?})", a.out.display(), aug.plan);
    Ok(())
}

/// Map file names of a sample, in [`MAP_FILES`] order.
fn source_maps(files: &SampleFiles) -> [&str; 6] {
    [
        &files.normal,
        &files.albedo,
        &files.roughness,
        &files.metallic,
        &files.alpha,
        &files.depth,
    ]
}

