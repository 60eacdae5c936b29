#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thermal_sr::config::RunConfig;
use thermal_sr::Tensor;

pub fn random<T: thermal_sr::Element>(shape: &[usize], seed: u64) -> Tensor<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n: usize = shape.iter().product();
    let data: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    Tensor::from_f64(shape, &data).unwrap()
}

pub fn uniform01(shape: &[usize], seed: u64) -> Tensor<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n: usize = shape.iter().product();
    let data: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    Tensor::new(shape, data).unwrap()
}

/// Two residual blocks, 16 channels, batch of 4: the small harness used by the smoke tests.
pub fn toy_config(variant: &str, max_steps: usize) -> RunConfig {
    RunConfig::from_toml(&format!(
        r#"
        [model]
        variant = "{variant}"
        residual_blocks = 2
        channels = 16
        discriminator_channels = 16
        [train]
        seed = 1
        batch_size = 4
        [content]
        epochs = {max_steps}
        max_steps = {max_steps}
        lr_start = 1e-3
        lr_end = 1e-4
        [gan]
        epochs = {max_steps}
        max_steps = {max_steps}
        lr_start = 1e-4
        lr_end = 1e-5
        d_lr_start = 1e-2
        d_lr_end = 1e-2
        "#
    ))
    .unwrap()
}

/// SSIM by explicit sliding 11x11 windows over every valid position.
pub fn ssim_oracle(a: &[f64], b: &[f64], h: usize, w: usize, max: f64) -> f64 {
    let k = 11;
    let sigma: f64 = 1.5;
    let mut win = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            let (di, dj) = (i as f64 - 5.0, j as f64 - 5.0);
            win[i * k + j] = (-(di * di + dj * dj) / (2.0 * sigma * sigma)).exp();
        }
    }
    let total: f64 = win.iter().sum();
    win.iter_mut().for_each(|v| *v /= total);
    let c1 = (0.01 * max).powi(2);
    let c2 = (0.03 * max).powi(2);
    let mut acc = 0.0;
    let mut count = 0;
    for y in 0..=h - k {
        for x in 0..=w - k {
            let (mut ma, mut mb) = (0.0, 0.0);
            for i in 0..k {
                for j in 0..k {
                    let p = (y + i) * w + x + j;
                    ma += win[i * k + j] * a[p];
                    mb += win[i * k + j] * b[p];
                }
            }
            let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
            for i in 0..k {
                for j in 0..k {
                    let p = (y + i) * w + x + j;
                    let (da, db) = (a[p] - ma, b[p] - mb);
                    va += win[i * k + j] * da * da;
                    vb += win[i * k + j] * db * db;
                    cov += win[i * k + j] * da * db;
                }
            }
            acc += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            count += 1;
        }
    }
    acc / count as f64
}
