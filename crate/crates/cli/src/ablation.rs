//! Light-count sweep over a dataset: every sample is solved from growing
//! subsets of its light images and scored against ground truth.

use std::fmt::Write as _;
use std::path::Path;

use lightrig_core::dataset::{read_gbuffer, read_manifest, read_sample, sample_dirs};
use lightrig_core::metrics::{average_reports, eval_report, held_out_pose, relight_pair, MetricsReport};
use lightrig_core::{solve_gbuffer, Error, Result, SolverConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const DEFAULT_COUNTS: [usize; 4] = [1, 3, 6, 9];

/// Light indices used for `count` images. Azimuths are spread evenly for
/// 3 and 6; a single image uses the camera-aligned light.
pub fn subset_for(count: usize, available: usize) -> Result<Vec<usize>> {
    let subset: Vec<usize> = match count {
        1 => vec![8],
        3 => vec![0, 3, 6],
        6 => vec![0, 1, 3, 4, 6, 7],
        9 => (0..9).collect(),
        _ => {
            return Err(Error::InvalidArgument(format!(
                "no light subset defined for L = {count} (use 1, 3, 6 or 9)"
            )))
        }
    };
    if count > available || subset.iter().any(|&i| i >= available) {
        return Err(Error::InvalidArgument(format!(
            "L = {count} needs light indices {subset:?} but samples have {available} lights"
        )));
    }
    Ok(subset)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub lights: usize,
    pub subset: Vec<usize>,
    pub report: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationResult {
    pub samples: usize,
    pub rows: Vec<AblationRow>,
}

/// Solves every manifest sample for each count in `counts` (strictly
/// increasing) and averages the per-sample reports. Relighting metrics use
/// the held-out light.
pub fn run_ablation(dataset: &Path, counts: &[usize], cfg: &SolverConfig) -> Result<AblationResult> {
    if counts.is_empty() || counts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(format!("light counts {counts:?} must be non-empty and strictly increasing")));
    }
    let manifest = read_manifest(dataset)?;
    if manifest.samples.is_empty() {
        return Err(Error::InvalidArgument(format!("{} lists no samples", dataset.display())));
    }
    let available = manifest.samples.iter().map(|s| s.meta.rig.len()).min().unwrap_or(0);
    let subsets = counts
        .iter()
        .map(|&c| subset_for(c, available))
        .collect::<Result<Vec<_>>>()?;

    let per_sample: Vec<Vec<MetricsReport>> = sample_dirs(dataset, &manifest)
        .par_iter()
        .map(|dir| {
            let (meta, mls) = read_sample(dir)?;
            let gt = read_gbuffer(dir)?;
            subsets
                .iter()
                .map(|subset| {
                    let sub = mls.subset(subset)?;
                    let (pred, _) = solve_gbuffer(&mls.input, &sub, &meta.camera, &meta.rig, cfg)?;
                    let pair = relight_pair(&pred, &gt, &meta.camera, &meta.rig, held_out_pose())?;
                    eval_report(&pred, &gt, &[pair])
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let rows = counts
        .iter()
        .zip(subsets)
        .enumerate()
        .map(|(k, (&lights, subset))| {
            let reports: Vec<MetricsReport> = per_sample.iter().map(|r| r[k].clone()).collect();
            Ok(AblationRow {
                lights,
                subset,
                report: average_reports(&reports)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(AblationResult {
        samples: manifest.samples.len(),
        rows,
    })
}

/// Plain-text table with the columns of the light-count ablation: albedo,
/// roughness and metallic PSNR/RMSE, then normal MAE and accuracies.
pub fn format_table(result: &AblationResult) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>3} | {:>7} {:>6} | {:>7} {:>6} | {:>7} {:>6} | {:>7} {:>6} {:>6} {:>6} {:>6}",
        "L", "alb dB", "RMSE", "rgh dB", "RMSE", "met dB", "RMSE", "MAE", "5°", "7.5°", "11.25°", "22.5°"
    );
    for row in &result.rows {
        let r = &row.report;
        // Accuracy thresholds are 3, 5, 7.5, 11.25, 22.5, 30 degrees.
        let acc = &r.normal.accuracy;
        let _ = writeln!(
            s,
            "{:>3} | {:>7.2} {:>6.3} | {:>7.2} {:>6.3} | {:>7.2} {:>6.3} | {:>7.3} {:>6.2} {:>6.2} {:>6.2} {:>6.2}",
            row.lights,
            r.albedo.psnr,
            r.albedo.rmse,
            r.roughness.psnr,
            r.roughness.rmse,
            r.metallic.psnr,
            r.metallic.rmse,
            r.normal.mean_deg,
            acc[1],
            acc[2],
            acc[3],
            acc[4]
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_match_the_fixed_table() {
        assert_eq!(subset_for(1, 9).unwrap(), vec![8]);
        assert_eq!(subset_for(3, 9).unwrap(), vec![0, 3, 6]);
        assert_eq!(subset_for(6, 9).unwrap(), vec![0, 1, 3, 4, 6, 7]);
        assert_eq!(subset_for(9, 9).unwrap(), (0..9).collect::<Vec<_>>());
    }

    #[test]
    fn too_many_lights_is_an_error() {
        assert!(subset_for(9, 6).is_err());
        assert!(subset_for(1, 8).is_err());
        assert!(subset_for(4, 9).is_err());
    }
}
