//! Full-reference image quality: PSNR and SSIM.

use std::fmt::Write as _;

use crate::data::gaussian_taps;
use crate::error::{Error, Result};
use crate::tensor::{Element, Tensor};

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

fn plane<T: Element>(t: &Tensor<T>, op: &'static str) -> Result<(usize, usize, Vec<f64>)> {
    let (h, w) = match t.shape() {
        [.., h, w] => (*h, *w),
        s => {
            return Err(Error::Contract(format!(
                "{op} needs an image, got shape {s:?}"
            )))
        }
    };
    if t.numel() != h * w {
        return Err(Error::Contract(format!(
            "{op} needs a single channel, got shape {:?}",
            t.shape()
        )));
    }
    Ok((h, w, t.data().iter().map(|v| v.to_f64_lossy()).collect()))
}

/// Plain mean squared error.
pub fn mse<T: Element>(reference: &Tensor<T>, test: &Tensor<T>) -> Result<f64> {
    if reference.shape() != test.shape() {
        return Err(Error::shape("mse", reference.shape(), test.shape()));
    }
    let total: f64 = reference
        .data()
        .iter()
        .zip(test.data())
        .map(|(a, b)| (a.to_f64_lossy() - b.to_f64_lossy()).powi(2))
        .sum();
    Ok(total / reference.numel() as f64)
}

/// `10 log10(max^2 / mse)`; identical inputs give `f64::INFINITY`.
pub fn psnr<T: Element>(reference: &Tensor<T>, test: &Tensor<T>, max_value: f64) -> Result<f64> {
    let e = mse(reference, test)?;
    if e == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (max_value * max_value / e).log10())
}

/// Valid-region separable filtering of an `h x w` plane.
fn filter_valid(src: &[f64], h: usize, w: usize, taps: &[f64]) -> Vec<f64> {
    let k = taps.len();
    let (oh, ow) = (h - k + 1, w - k + 1);
    let mut rows = vec![0.0; h * ow];
    for y in 0..h {
        for x in 0..ow {
            rows[y * ow + x] = taps
                .iter()
                .enumerate()
                .map(|(i, t)| t * src[y * w + x + i])
                .sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = taps
                .iter()
                .enumerate()
                .map(|(i, t)| t * rows[(y + i) * ow + x])
                .sum();
        }
    }
    out
}

/// Mean SSIM over all full window positions (11x11 Gaussian, sigma 1.5).
pub fn ssim<T: Element>(reference: &Tensor<T>, test: &Tensor<T>, max_value: f64) -> Result<f64> {
    if reference.shape() != test.shape() {
        return Err(Error::shape("ssim", reference.shape(), test.shape()));
    }
    let (h, w, x) = plane(reference, "ssim")?;
    let (_, _, y) = plane(test, "ssim")?;
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::Contract(format!(
            "ssim needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels, got {h}x{w}"
        )));
    }
    let taps = gaussian_taps(SSIM_WINDOW, SSIM_SIGMA);
    let c1 = (SSIM_K1 * max_value).powi(2);
    let c2 = (SSIM_K2 * max_value).powi(2);
    let f = |v: &[f64]| filter_valid(v, h, w, &taps);
    let prod = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).collect::<Vec<_>>();
    let (mx, my) = (f(&x), f(&y));
    let (exx, eyy, exy) = (f(&prod(&x, &x)), f(&prod(&y, &y)), f(&prod(&x, &y)));
    let n = mx.len();
    let total: f64 = (0..n)
        .map(|i| {
            let (a, b) = (mx[i], my[i]);
            let (vx, vy, cxy) = (exx[i] - a * a, eyy[i] - b * b, exy[i] - a * b);
            ((2.0 * a * b + c1) * (2.0 * cxy + c2)) / ((a * a + b * b + c1) * (vx + vy + c2))
        })
        .sum();
    Ok(total / n as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImageScore {
    pub id: String,
    pub psnr: f64,
    pub ssim: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricReport {
    pub images: Vec<ImageScore>,
}

impl MetricReport {
    pub fn push(&mut self, id: impl Into<String>, psnr: f64, ssim: f64) {
        self.images.push(ImageScore {
            id: id.into(),
            psnr,
            ssim,
        });
    }

    /// Mean over finite PSNR values; infinite entries are skipped with a
    /// warning, and if none are finite the sentinel itself is returned.
    pub fn mean_psnr(&self) -> f64 {
        let finite: Vec<f64> = self
            .images
            .iter()
            .map(|s| s.psnr)
            .filter(|v| v.is_finite())
            .collect();
        let skipped = self.images.len() - finite.len();
        if skipped > 0 {
            log::warn!("{skipped} image(s) have infinite PSNR and are excluded from the mean");
        }
        if finite.is_empty() {
            return if self.images.is_empty() {
                f64::NAN
            } else {
                f64::INFINITY
            };
        }
        finite.iter().sum::<f64>() / finite.len() as f64
    }

    pub fn mean_ssim(&self) -> f64 {
        self.images.iter().map(|s| s.ssim).sum::<f64>() / self.images.len() as f64
    }

    /// `id<TAB>psnr<TAB>ssim` per image, then a `mean` line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.images {
            let _ = writeln!(out, "{}\t{:.6}\t{:.6}", s.id, s.psnr, s.ssim);
        }
        let _ = writeln!(
            out,
            "mean\t{:.6}\t{:.6}",
            self.mean_psnr(),
            self.mean_ssim()
        );
        out
    }
}
