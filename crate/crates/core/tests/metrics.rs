mod common;

use common::{ssim_oracle, uniform01};
use proptest::prelude::*;
use thermal_sr::metrics::{psnr, ssim, MetricReport};
use thermal_sr::{Error, Tensor};

#[test]
fn psnr_uniform_offsets() {
    let a = Tensor::<f64>::full(&[1, 8, 8], 0.2);
    assert!((psnr(&a, &a.map(|v| v + 0.1), 1.0).unwrap() - 20.0).abs() < 1e-9);
    assert!((psnr(&a, &a.map(|v| v + 0.5), 1.0).unwrap() - 20.0 * 2f64.log10()).abs() < 1e-9);
    assert_eq!(psnr(&a, &a, 1.0).unwrap(), f64::INFINITY);
}

#[test]
fn ssim_matches_sliding_window_oracle() {
    for k in 0..20u64 {
        let (h, w) = (16 + (k as usize % 4) * 3, 20 + (k as usize % 3) * 5);
        let a = uniform01(&[1, h, w], 100 + k);
        let noise = uniform01(&[1, h, w], 200 + k);
        let mix = 0.05 * k as f64;
        let b = a.zip_map(&noise, |x, n| (1.0 - mix) * x + mix * n).unwrap();
        let got = ssim(&a, &b, 1.0).unwrap();
        let want = ssim_oracle(a.data(), b.data(), h, w, 1.0);
        assert!((got - want).abs() < 1e-6, "pair {k}: {got} vs {want}");
    }
}

#[test]
fn ssim_rejects_small_or_stacked_frames() {
    let a = Tensor::<f64>::zeros(&[1, 10, 30]);
    assert!(matches!(ssim(&a, &a, 1.0), Err(Error::Contract(_))));
    let b = Tensor::<f64>::zeros(&[2, 16, 16]);
    assert!(ssim(&b, &b, 1.0).is_err());
}

#[test]
fn report_text_has_one_line_per_image_and_a_mean() {
    let mut r = MetricReport::default();
    r.push("a", 30.0, 0.9);
    r.push("b", 32.0, 0.8);
    let text = r.to_text();
    assert_eq!(text.lines().count(), 3);
    assert_eq!(text.lines().last().unwrap(), "mean\t31.000000\t0.850000");
}

proptest! {
    #[test]
    fn ssim_of_identical_frames_is_one(seed in any::<u64>(), h in 11usize..24, w in 11usize..24) {
        let a = uniform01(&[1, h, w], seed);
        prop_assert!((ssim(&a, &a, 1.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn psnr_is_symmetric(seed in any::<u64>()) {
        let a = uniform01(&[1, 12, 12], seed);
        let b = uniform01(&[1, 12, 12], seed ^ 1);
        prop_assert_eq!(psnr(&a, &b, 1.0).unwrap(), psnr(&b, &a, 1.0).unwrap());
    }
}
