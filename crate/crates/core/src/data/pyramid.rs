//! Low-resolution synthesis: two Gaussian-pyramid levels (blur, keep every
//! second pixel), i.e. a x0.25 reduction.

use crate::error::{Error, Result};
use crate::tensor::kernels::{pad_source, PadMode};
use crate::tensor::{Element, Tensor};

pub const PYRAMID_TAPS: usize = 5;
pub const PYRAMID_SIGMA: f64 = 1.0;
pub const PYRAMID_LEVELS: usize = 2;

/// Normalized 1-D Gaussian taps; the 2-D kernel is their outer product.
pub fn gaussian_taps(taps: usize, sigma: f64) -> Vec<f64> {
    let half = (taps / 2) as f64;
    let raw: Vec<f64> = (0..taps)
        .map(|i| {
            let x = i as f64 - half;
            (-x * x / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

/// Separable Gaussian blur of one `h x w` plane with reflective borders,
/// accumulated as offsets from the centre pixel so flat regions stay bit-exact.
fn blur_plane(src: &[f64], h: usize, w: usize, taps: &[f64]) -> Vec<f64> {
    let r = taps.len() / 2;
    let mut tmp = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            let centre = src[y * w + x];
            let mut acc = 0.0;
            for (k, &t) in taps.iter().enumerate() {
                let sx = pad_source(x + k, r, w, PadMode::Reflect).expect("reflect always maps");
                acc += t * (src[y * w + sx] - centre);
            }
            tmp[y * w + x] = centre + acc;
        }
    }
    let mut out = vec![0.0; h * w];
    for y in 0..h {
        for (k, &t) in taps.iter().enumerate() {
            let sy = pad_source(y + k, r, h, PadMode::Reflect).expect("reflect always maps");
            for x in 0..w {
                out[y * w + x] += t * (tmp[sy * w + x] - tmp[y * w + x]);
            }
        }
    }
    for (o, c) in out.iter_mut().zip(&tmp) {
        *o += c;
    }
    out
}

fn pyramid_down(src: &[f64], h: usize, w: usize, taps: &[f64]) -> Vec<f64> {
    let blurred = blur_plane(src, h, w, taps);
    let (oh, ow) = (h / 2, w / 2);
    let mut out = Vec::with_capacity(oh * ow);
    for y in 0..oh {
        for x in 0..ow {
            out.push(blurred[2 * y * w + 2 * x]);
        }
    }
    out
}

/// Reduces the last two axes of `t_hr` by 4 (e.g. `(1, 240, 320) -> (1, 60, 80)`).
pub fn make_lr<T: Element>(t_hr: &Tensor<T>) -> Result<Tensor<T>> {
    let shape = t_hr.shape();
    if shape.len() < 2 {
        return Err(Error::Contract(format!(
            "make_lr needs spatial axes, got {shape:?}"
        )));
    }
    let (h, w) = (shape[shape.len() - 2], shape[shape.len() - 1]);
    let factor = 1 << PYRAMID_LEVELS;
    if h % factor != 0 || w % factor != 0 {
        return Err(Error::Contract(format!(
            "make_lr needs spatial dims divisible by {factor}, got {h}x{w}"
        )));
    }
    if h / 2 <= PYRAMID_TAPS / 2 || w / 2 <= PYRAMID_TAPS / 2 {
        return Err(Error::Contract(format!(
            "{h}x{w} is too small for a {PYRAMID_TAPS}-tap pyramid"
        )));
    }
    let taps = gaussian_taps(PYRAMID_TAPS, PYRAMID_SIGMA);
    let mut out = Vec::with_capacity(t_hr.numel() / (factor * factor));
    for plane in t_hr.data().chunks(h * w) {
        let mut cur: Vec<f64> = plane.iter().map(|v| v.to_f64_lossy()).collect();
        let (mut ch, mut cw) = (h, w);
        for _ in 0..PYRAMID_LEVELS {
            cur = pyramid_down(&cur, ch, cw, &taps);
            ch /= 2;
            cw /= 2;
        }
        out.extend(cur.into_iter().map(T::of));
    }
    let mut out_shape = shape.to_vec();
    let n = out_shape.len();
    out_shape[n - 2] = h / factor;
    out_shape[n - 1] = w / factor;
    Tensor::new(&out_shape, out)
}
