use lightrig_core::metrics::{
    angular_error_stats, combined_score, eval_report, image_metrics, masked_ssim, normal_loss, pbr_loss,
    ACCURACY_THRESHOLDS, NORMAL_LOSS_LAMBDA, PSNR_CAP,
};
use lightrig_core::{GBuffer, ImagePlane};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn random_unit(rng: &mut ChaCha8Rng) -> [f32; 3] {
    loop {
        let v: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-3 && n <= 1.0 {
            return v.map(|c| (c / n) as f32);
        }
    }
}

fn random_normals(rng: &mut ChaCha8Rng, w: usize, h: usize) -> ImagePlane {
    ImagePlane::from_fn(w, h, 3, |_, _| random_unit(rng))
}

fn sphere_gbuffer(size: usize) -> GBuffer {
    let mut gb = GBuffer::zeros(size, size);
    for y in 0..size {
        for x in 0..size {
            let i = y * size + x;
            let u = (x as f64 + 0.5) / size as f64 * 2.0 - 1.0;
            let v = 1.0 - (y as f64 + 0.5) / size as f64 * 2.0;
            let r2 = u * u + v * v;
            if r2 >= 1.0 {
                continue;
            }
            gb.alpha.data_mut()[i] = 1.0;
            gb.set_normal(i, &lightrig_core::math::vec3(u, v, (1.0 - r2).sqrt()));
            gb.set_albedo(i, [0.2 + 0.6 * (u * 0.5 + 0.5), 0.5, 0.3]);
            gb.roughness.data_mut()[i] = 0.5;
            gb.metallic.data_mut()[i] = if u > 0.0 { 1.0 } else { 0.0 };
        }
    }
    gb
}

#[test]
fn accuracy_is_monotone_over_random_map_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let (w, h) = (rng.random_range(1..9), rng.random_range(1..9));
        let pred = random_normals(&mut rng, w, h);
        let gt = random_normals(&mut rng, w, h);
        let mut mask: Vec<bool> = (0..w * h).map(|_| rng.random_bool(0.7)).collect();
        mask[0] = true;
        let s = angular_error_stats(&pred, &gt, &mask).unwrap();
        assert_eq!(s.accuracy.len(), ACCURACY_THRESHOLDS.len());
        assert!(s.accuracy.windows(2).all(|p| p[0] <= p[1]), "{:?}", s.accuracy);
        assert!(s.accuracy.iter().all(|a| (0.0..=100.0).contains(a)));
        assert!(s.mean_deg >= 0.0 && s.median_deg >= 0.0);
    }
}

#[test]
fn pbr_loss_examples() {
    let gt = sphere_gbuffer(16);
    let mask = gt.mask();
    assert_eq!(pbr_loss(&gt, &gt, &mask).unwrap(), 0.0);

    let mut albedo_off = gt.clone();
    albedo_off.albedo = gt.albedo.map(|v| v + 0.1);
    assert!((pbr_loss(&albedo_off, &gt, &mask).unwrap() - 0.01).abs() < 1e-7);

    let mut rm_off = gt.clone();
    rm_off.roughness = gt.roughness.map(|v| v + 0.1);
    rm_off.metallic = gt.metallic.map(|v| v + 0.1);
    assert!((pbr_loss(&rm_off, &gt, &mask).unwrap() - 0.02).abs() < 1e-7);
}

#[test]
fn perfect_prediction_report() {
    let gt = sphere_gbuffer(24);
    let report = eval_report(&gt, &gt, &[]).unwrap();
    assert_eq!(report.normal.mean_deg, 0.0);
    assert!(report.normal.accuracy.iter().all(|&a| a == 100.0));
    assert_eq!(report.albedo.psnr, PSNR_CAP);
    assert_eq!(report.roughness.rmse, 0.0);
    assert_eq!(report.combined, 0.0);
    assert!(report.relight.is_none());
    let json = serde_json::to_value(&report).unwrap();
    assert!(json["relight"].is_null());
    for key in ["normal", "albedo", "roughness", "metallic", "normal_loss", "pbr_loss", "combined"] {
        assert!(json.get(key).is_some(), "{key}");
    }

    let img = ImagePlane::filled(24, 24, &[0.3, 0.2, 0.1]);
    let relit = eval_report(&gt, &gt, &[(img.clone(), img)]).unwrap().relight.unwrap();
    assert_eq!(relit.psnr, PSNR_CAP);
    assert_eq!(relit.ssim, 1.0);
    assert_eq!(relit.pairs, 1);
}

#[test]
fn albedo_noise_lowers_psnr() {
    let gt = sphere_gbuffer(32);
    let mut noisy = gt.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let noise = Normal::new(0.0, 0.05).unwrap();
    for v in noisy.albedo.data_mut() {
        *v = (*v as f64 + noise.sample(&mut rng)).clamp(0.0, 1.0) as f32;
    }
    let clean = eval_report(&gt, &gt, &[]).unwrap();
    let dirty = eval_report(&noisy, &gt, &[]).unwrap();
    assert!(dirty.albedo.psnr < clean.albedo.psnr);
    assert!(dirty.albedo.psnr < 30.0);
    assert_eq!(dirty.normal, clean.normal);
}

#[test]
fn combined_weights_normals_four_to_one() {
    assert_eq!(combined_score(0.5, 1.0), 0.6);
}

proptest! {
    #[test]
    fn psnr_matches_rmse(seed in any::<u64>(), offset in 0.001f32..0.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gt = ImagePlane::from_fn(8, 8, 3, |_, _| std::array::from_fn(|_| rng.random_range(0.0..0.5)));
        let pred = gt.map(|v| v + offset);
        let m = image_metrics(&pred, &gt, &vec![true; 64]).unwrap();
        prop_assert!((m.psnr + 20.0 * m.rmse.log10()).abs() < 1e-9);
    }

    #[test]
    fn ssim_identity_and_symmetry(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = ImagePlane::from_fn(13, 9, 3, |_, _| std::array::from_fn(|_| rng.random_range(0.0..1.0)));
        let b = ImagePlane::from_fn(13, 9, 3, |_, _| std::array::from_fn(|_| rng.random_range(0.0..1.0)));
        let mask: Vec<bool> = (0..13 * 9).map(|i| i % 5 != 0).collect();
        prop_assert_eq!(masked_ssim(&a, &a, &mask).unwrap(), 1.0);
        prop_assert!((masked_ssim(&a, &b, &mask).unwrap() - masked_ssim(&b, &a, &mask).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn normal_loss_is_bounded(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_normals(&mut rng, 5, 5);
        let b = random_normals(&mut rng, 5, 5);
        let mask = vec![true; 25];
        let l = normal_loss(&a, &b, &mask, NORMAL_LOSS_LAMBDA).unwrap();
        prop_assert!((-1e-6..=3.0 + 1e-6).contains(&l));
        prop_assert!(normal_loss(&a, &a, &mask, NORMAL_LOSS_LAMBDA).unwrap().abs() < 1e-6);
    }
}
