//! Evaluation: angular-error statistics over normal maps, masked image
//! metrics (MSE, PSNR, RMSE, SSIM) and the normal / PBR training losses used
//! as scores. Every metric is restricted to a foreground mask; pixels outside
//! it never influence a result.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::gbuffer::GBuffer;
use crate::image::ImagePlane;
use crate::math::CompensatedSum;
use crate::render::{render_pointlight_gbuffer, tonemap_srgb};
use crate::rig::{pose_position, LightPose, LightRig};

/// Accuracy thresholds in degrees.
pub const ACCURACY_THRESHOLDS: [f64; 6] = [3.0, 5.0, 7.5, 11.25, 22.5, 30.0];
pub const PSNR_CAP: f64 = 99.0;
/// MSE below which PSNR reports [`PSNR_CAP`].
pub const PSNR_CAP_MSE: f64 = 1e-10;
/// Weight of the squared-distance term in [`normal_loss`].
pub const NORMAL_LOSS_LAMBDA: f64 = 0.25;
/// Normal loss to PBR loss weighting in [`combined_score`].
pub const NORMAL_WEIGHT: f64 = 4.0;
pub const PBR_WEIGHT: f64 = 1.0;

const SSIM_RADIUS: usize = 5;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_C1: f64 = 0.01 * 0.01;
const SSIM_C2: f64 = 0.03 * 0.03;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngularStats {
    pub mean_deg: f64,
    pub median_deg: f64,
    /// Percentage of pixels with error at most each of [`ACCURACY_THRESHOLDS`].
    pub accuracy: Vec<f64>,
    pub pixels: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImageMetrics {
    pub psnr: f64,
    pub rmse: f64,
    pub ssim: f64,
}

fn check_mask(mask: &[bool], pixels: usize) -> Result<()> {
    if mask.len() != pixels {
        return Err(Error::DimensionMismatch(format!("mask has {} entries for {pixels} pixels", mask.len())));
    }
    if !mask.iter().any(|&m| m) {
        return Err(Error::EmptyMask);
    }
    Ok(())
}

fn check_pair(pred: &ImagePlane, gt: &ImagePlane, mask: &[bool]) -> Result<()> {
    if !pred.same_shape(gt) {
        return Err(Error::DimensionMismatch(format!(
            "{}x{}x{} vs {}x{}x{}",
            pred.width(),
            pred.height(),
            pred.channels(),
            gt.width(),
            gt.height(),
            gt.channels()
        )));
    }
    check_mask(mask, pred.pixel_count())
}

fn unit(v: [f64; 3]) -> Vector3<f64> {
    let v = Vector3::from(v);
    let n = v.norm();
    if n > 0.0 {
        v / n
    } else {
        v
    }
}

/// Angle in radians between two directions. The atan2 form agrees with
/// `acos(a·b)` for unit inputs but stays exact near 0 and π, where f32
/// storage otherwise leaves a spurious floor of about 0.02°.
pub fn angle_between(a: [f64; 3], b: [f64; 3]) -> f64 {
    let (a, b) = (unit(a), unit(b));
    a.cross(&b).norm().atan2(a.dot(&b))
}

/// Per-pixel angle in degrees between unit normals on the mask.
pub fn angular_errors(pred: &ImagePlane, gt: &ImagePlane, mask: &[bool]) -> Result<Vec<f64>> {
    check_pair(pred, gt, mask)?;
    if pred.channels() != 3 {
        return Err(Error::DimensionMismatch("normal maps need 3 channels".into()));
    }
    Ok(mask
        .iter()
        .enumerate()
        .filter(|(_, &m)| m)
        .map(|(i, _)| angle_between(pred.rgb_at(i), gt.rgb_at(i)).to_degrees())
        .collect())
}

/// Statistics of a list of angular errors in degrees.
pub fn summarize_angles(errors: &[f64]) -> Result<AngularStats> {
    if errors.is_empty() {
        return Err(Error::EmptyMask);
    }
    let mean_deg = errors.iter().copied().collect::<CompensatedSum>().value() / errors.len() as f64;
    let mut sorted = errors.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median_deg = if sorted.len() % 2 == 0 {
        0.5 * (sorted[mid - 1] + sorted[mid])
    } else {
        sorted[mid]
    };
    let accuracy = ACCURACY_THRESHOLDS
        .iter()
        .map(|&tau| {
            let within = sorted.partition_point(|&e| e <= tau);
            100.0 * within as f64 / sorted.len() as f64
        })
        .collect();
    Ok(AngularStats {
        mean_deg,
        median_deg,
        accuracy,
        pixels: errors.len(),
    })
}

pub fn angular_error_stats(pred: &ImagePlane, gt: &ImagePlane, mask: &[bool]) -> Result<AngularStats> {
    summarize_angles(&angular_errors(pred, gt, mask)?)
}

/// Mean squared error over masked pixels and all channels.
pub fn masked_mse(pred: &ImagePlane, gt: &ImagePlane, mask: &[bool]) -> Result<f64> {
    check_pair(pred, gt, mask)?;
    let ch = pred.channels();
    let mut acc = CompensatedSum::new();
    let mut count = 0usize;
    for (i, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
        for c in 0..ch {
            let d = pred.data()[i * ch + c] as f64 - gt.data()[i * ch + c] as f64;
            acc.add(d * d);
        }
        count += ch;
    }
    Ok(acc.value() / count as f64)
}

/// PSNR for unit dynamic range, capped at [`PSNR_CAP`].
pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse < PSNR_CAP_MSE {
        PSNR_CAP
    } else {
        (10.0 * (1.0 / mse).log10()).min(PSNR_CAP)
    }
}

fn gaussian_window() -> [f64; 2 * SSIM_RADIUS + 1] {
    std::array::from_fn(|k| {
        let d = k as f64 - SSIM_RADIUS as f64;
        (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp()
    })
}

/// Mean SSIM over masked window centers, averaged over channels. Window
/// weights are limited to in-bounds masked pixels and renormalized.
pub fn masked_ssim(pred: &ImagePlane, gt: &ImagePlane, mask: &[bool]) -> Result<f64> {
    check_pair(pred, gt, mask)?;
    let (w, h, ch) = (pred.width(), pred.height(), pred.channels());
    let g = gaussian_window();
    let r = SSIM_RADIUS as isize;
    let mut acc = CompensatedSum::new();
    let mut count = 0usize;
    for cy in 0..h {
        for cx in 0..w {
            if !mask[cy * w + cx] {
                continue;
            }
            for c in 0..ch {
                let (mut sw, mut sx, mut sy) = (0.0, 0.0, 0.0);
                let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
                for dy in -r..=r {
                    let y = cy as isize + dy;
                    if y < 0 || y >= h as isize {
                        continue;
                    }
                    for dx in -r..=r {
                        let x = cx as isize + dx;
                        if x < 0 || x >= w as isize {
                            continue;
                        }
                        let i = y as usize * w + x as usize;
                        if !mask[i] {
                            continue;
                        }
                        let wt = g[(dy + r) as usize] * g[(dx + r) as usize];
                        let a = pred.data()[i * ch + c] as f64;
                        let b = gt.data()[i * ch + c] as f64;
                        sw += wt;
                        sx += wt * a;
                        sy += wt * b;
                        sxx += wt * a * a;
                        syy += wt * b * b;
                        sxy += wt * a * b;
                    }
                }
                let (mx, my) = (sx / sw, sy / sw);
                // Unclamped so that identical inputs give exactly 1.
                let vx = sxx / sw - mx * mx;
                let vy = syy / sw - my * my;
                let cov = sxy / sw - mx * my;
                let s = ((2.0 * mx * my + SSIM_C1) * (2.0 * cov + SSIM_C2))
                    / ((mx * mx + my * my + SSIM_C1) * (vx + vy + SSIM_C2));
                acc.add(s);
                count += 1;
            }
        }
    }
    Ok(acc.value() / count as f64)
}

pub fn image_metrics(pred: &ImagePlane, gt: &ImagePlane, mask: &[bool]) -> Result<ImageMetrics> {
    let mse = masked_mse(pred, gt, mask)?;
    Ok(ImageMetrics {
        psnr: psnr_from_mse(mse),
        rmse: mse.sqrt(),
        ssim: masked_ssim(pred, gt, mask)?,
    })
}

/// Mean over the mask of `(1 - cos) + lambda * |n - n̂|²` on renormalized
/// inputs.
pub fn normal_loss(pred: &ImagePlane, gt: &ImagePlane, mask: &[bool], lambda: f64) -> Result<f64> {
    check_pair(pred, gt, mask)?;
    let mut acc = CompensatedSum::new();
    let mut count = 0usize;
    for (i, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
        let (a, b) = (unit(pred.rgb_at(i)), unit(gt.rgb_at(i)));
        // For unit vectors 1 - cos equals half the squared distance; this
        // form is exactly zero for equal inputs.
        let dist2 = (a - b).norm_squared();
        acc.add(0.5 * dist2 + lambda * dist2);
        count += 1;
    }
    Ok(acc.value() / count as f64)
}

/// Sum of the masked albedo, roughness and metallic MSEs.
pub fn pbr_loss(pred: &GBuffer, gt: &GBuffer, mask: &[bool]) -> Result<f64> {
    Ok(masked_mse(&pred.albedo, &gt.albedo, mask)?
        + masked_mse(&pred.roughness, &gt.roughness, mask)?
        + masked_mse(&pred.metallic, &gt.metallic, mask)?)
}

pub fn combined_score(normal_loss: f64, pbr_loss: f64) -> f64 {
    (NORMAL_WEIGHT * normal_loss + PBR_WEIGHT * pbr_loss) / (NORMAL_WEIGHT + PBR_WEIGHT)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapMetrics {
    pub psnr: f64,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelightMetrics {
    pub psnr: f64,
    pub ssim: f64,
    pub pairs: usize,
}

/// Serialized with one key per field; `relight` is `null` when no relit
/// pairs were supplied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub normal: AngularStats,
    pub albedo: MapMetrics,
    pub roughness: MapMetrics,
    pub metallic: MapMetrics,
    pub relight: Option<RelightMetrics>,
    pub normal_loss: f64,
    pub pbr_loss: f64,
    pub combined: f64,
}

fn map_metrics(pred: &ImagePlane, gt: &ImagePlane, mask: &[bool]) -> Result<MapMetrics> {
    let mse = masked_mse(pred, gt, mask)?;
    Ok(MapMetrics {
        psnr: psnr_from_mse(mse),
        rmse: mse.sqrt(),
    })
}

/// Full report on the ground-truth foreground. Relighting metrics average
/// per-pair PSNR and SSIM.
pub fn eval_report(pred: &GBuffer, gt: &GBuffer, relit: &[(ImagePlane, ImagePlane)]) -> Result<MetricsReport> {
    let mask = gt.mask();
    let nl = normal_loss(&pred.normal, &gt.normal, &mask, NORMAL_LOSS_LAMBDA)?;
    let pl = pbr_loss(pred, gt, &mask)?;
    let relight = if relit.is_empty() {
        None
    } else {
        let mut psnr = CompensatedSum::new();
        let mut ssim = CompensatedSum::new();
        for (p, g) in relit {
            let m = image_metrics(p, g, &mask)?;
            psnr.add(m.psnr);
            ssim.add(m.ssim);
        }
        let n = relit.len() as f64;
        Some(RelightMetrics {
            psnr: psnr.value() / n,
            ssim: ssim.value() / n,
            pairs: relit.len(),
        })
    };
    Ok(MetricsReport {
        normal: angular_error_stats(&pred.normal, &gt.normal, &mask)?,
        albedo: map_metrics(&pred.albedo, &gt.albedo, &mask)?,
        roughness: map_metrics(&pred.roughness, &gt.roughness, &mask)?,
        metallic: map_metrics(&pred.metallic, &gt.metallic, &mask)?,
        relight,
        normal_loss: nl,
        pbr_loss: pl,
        combined: combined_score(nl, pl),
    })
}

/// Evaluation light outside the default rig: midway between two rig
/// azimuths at the mean rig elevation.
pub fn held_out_pose() -> LightPose {
    LightPose::new(std::f64::consts::PI / 8.0, std::f64::consts::PI / 4.0)
}

/// `pred` and `gt` relit by one point light at `pose` (rig radius and
/// intensity), sRGB-encoded. Neither image has cast shadows.
pub fn relight_pair(
    pred: &GBuffer,
    gt: &GBuffer,
    camera: &Camera,
    rig: &LightRig,
    pose: LightPose,
) -> Result<(ImagePlane, ImagePlane)> {
    let position = pose_position(pose, rig.radius, camera)?;
    let p = render_pointlight_gbuffer(pred, camera, &position, rig.intensity)?;
    let g = render_pointlight_gbuffer(gt, camera, &position, rig.intensity)?;
    Ok((tonemap_srgb(&p), tonemap_srgb(&g)))
}

/// Mean of per-sample reports. Angular statistics average the per-sample
/// values; `pixels` sums.
pub fn average_reports(reports: &[MetricsReport]) -> Result<MetricsReport> {
    let first = reports.first().ok_or_else(|| Error::InvalidArgument("no reports to average".into()))?;
    let n = reports.len() as f64;
    let mean = |f: &dyn Fn(&MetricsReport) -> f64| reports.iter().map(f).collect::<CompensatedSum>().value() / n;
    let map = |f: &dyn Fn(&MetricsReport) -> &MapMetrics| MapMetrics {
        psnr: mean(&|r| f(r).psnr),
        rmse: mean(&|r| f(r).rmse),
    };
    let relight = if reports.iter().all(|r| r.relight.is_some()) {
        first.relight.as_ref().map(|_| {
            let get = |r: &MetricsReport| r.relight.clone().expect("checked above");
            RelightMetrics {
                psnr: mean(&|r| get(r).psnr),
                ssim: mean(&|r| get(r).ssim),
                pairs: reports.iter().map(|r| get(r).pairs).sum(),
            }
        })
    } else {
        None
    };
    Ok(MetricsReport {
        normal: AngularStats {
            mean_deg: mean(&|r| r.normal.mean_deg),
            median_deg: mean(&|r| r.normal.median_deg),
            accuracy: (0..ACCURACY_THRESHOLDS.len())
                .map(|k| mean(&|r| r.normal.accuracy[k]))
                .collect(),
            pixels: reports.iter().map(|r| r.normal.pixels).sum(),
        },
        albedo: map(&|r| &r.albedo),
        roughness: map(&|r| &r.roughness),
        metallic: map(&|r| &r.metallic),
        relight,
        normal_loss: mean(&|r| r.normal_loss),
        pbr_loss: mean(&|r| r.pbr_loss),
        combined: mean(&|r| r.combined),
    })
}
