//! Fixed (non-learned) image resampling, applied separably as `Mh * X * Mw^T`
//! on every plane.
//!
//! Conventions: bilinear uses align-corners sampling (`src = dst * (in-1)/(out-1)`);
//! bicubic uses half-pixel centres (`src = (dst + 0.5)/factor - 0.5`) with the
//! Keys kernel at `a = -0.5` and edge-clamped taps.

use std::rc::Rc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::kernels::gemm;
use crate::tensor::{Element, Tensor, Var};

pub const BICUBIC_A: f64 = -0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InterpMethod {
    Bilinear,
    Bicubic,
}

/// `out x in` row-stochastic interpolation matrix for one axis.
pub fn interp_matrix(method: InterpMethod, input: usize, output: usize) -> Vec<f64> {
    let mut m = vec![0.0; output * input];
    match method {
        InterpMethod::Bilinear => {
            for o in 0..output {
                let src = if output > 1 {
                    o as f64 * (input - 1) as f64 / (output - 1) as f64
                } else {
                    0.0
                };
                let i0 = (src.floor() as usize).min(input - 1);
                let i1 = (i0 + 1).min(input - 1);
                let t = src - i0 as f64;
                m[o * input + i0] += 1.0 - t;
                m[o * input + i1] += t;
            }
        }
        InterpMethod::Bicubic => {
            let scale = input as f64 / output as f64;
            for o in 0..output {
                let src = (o as f64 + 0.5) * scale - 0.5;
                let base = src.floor();
                let t = src - base;
                for k in -1..=2isize {
                    let weight = keys_cubic(t - k as f64);
                    let idx = (base as isize + k).clamp(0, input as isize - 1) as usize;
                    m[o * input + idx] += weight;
                }
            }
        }
    }
    m
}

fn keys_cubic(x: f64) -> f64 {
    let a = BICUBIC_A;
    let x = x.abs();
    if x <= 1.0 {
        ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a
    } else {
        0.0
    }
}

/// Applies `rows` (`oh x h`) and `cols` (`ow x w`) to every plane of `x`.
fn resize_planes<T: Element>(
    x: &[T],
    planes: usize,
    (h, w): (usize, usize),
    (oh, ow): (usize, usize),
    rows: &[T],
    cols: &[T],
) -> Vec<T> {
    let mut out = vec![T::zero(); planes * oh * ow];
    let mut tmp = vec![T::zero(); oh * w];
    for p in 0..planes {
        gemm(
            oh,
            h,
            w,
            T::one(),
            rows,
            false,
            &x[p * h * w..(p + 1) * h * w],
            false,
            T::zero(),
            &mut tmp,
        );
        gemm(
            oh,
            w,
            ow,
            T::one(),
            &tmp,
            false,
            cols,
            true,
            T::zero(),
            &mut out[p * oh * ow..(p + 1) * oh * ow],
        );
    }
    out
}

/// Adjoint of [`resize_planes`]: `Mh^T * G * Mw`.
fn resize_planes_backward<T: Element>(
    g: &[T],
    planes: usize,
    (h, w): (usize, usize),
    (oh, ow): (usize, usize),
    rows: &[T],
    cols: &[T],
) -> Vec<T> {
    let mut out = vec![T::zero(); planes * h * w];
    let mut tmp = vec![T::zero(); h * ow];
    for p in 0..planes {
        gemm(
            h,
            oh,
            ow,
            T::one(),
            rows,
            true,
            &g[p * oh * ow..(p + 1) * oh * ow],
            false,
            T::zero(),
            &mut tmp,
        );
        gemm(
            h,
            ow,
            w,
            T::one(),
            &tmp,
            false,
            cols,
            false,
            T::zero(),
            &mut out[p * h * w..(p + 1) * h * w],
        );
    }
    out
}

/// Non-differentiable resize of a plain tensor.
pub fn interp_upsample<T: Element>(
    x: &Tensor<T>,
    method: InterpMethod,
    factor: usize,
) -> Result<Tensor<T>> {
    let (b, c, h, w) = x.dims4()?;
    if factor == 0 {
        return Err(Error::Config("upsample factor must be at least 1".into()));
    }
    let (oh, ow) = (h * factor, w * factor);
    let rows: Vec<T> = interp_matrix(method, h, oh)
        .into_iter()
        .map(T::of)
        .collect();
    let cols: Vec<T> = interp_matrix(method, w, ow)
        .into_iter()
        .map(T::of)
        .collect();
    let out = resize_planes(x.data(), b * c, (h, w), (oh, ow), &rows, &cols);
    Tensor::new(&[b, c, oh, ow], out)
}

impl<'t, T: Element> Var<'t, T> {
    pub fn interp_upsample(&self, method: InterpMethod, factor: usize) -> Result<Var<'t, T>> {
        let x = self.value();
        let (b, c, h, w) = x.dims4()?;
        if factor == 0 {
            return Err(Error::Config("upsample factor must be at least 1".into()));
        }
        let (oh, ow) = (h * factor, w * factor);
        let rows: Rc<Vec<T>> = Rc::new(
            interp_matrix(method, h, oh)
                .into_iter()
                .map(T::of)
                .collect(),
        );
        let cols: Rc<Vec<T>> = Rc::new(
            interp_matrix(method, w, ow)
                .into_iter()
                .map(T::of)
                .collect(),
        );
        let out = resize_planes(x.data(), b * c, (h, w), (oh, ow), &rows, &cols);
        let out = Tensor::new(&[b, c, oh, ow], out)?;
        Ok(self.tape.record(
            out,
            &[*self],
            Box::new(move |g, _| {
                let d = resize_planes_backward(g.data(), b * c, (h, w), (oh, ow), &rows, &cols);
                vec![Some(Tensor::new(&[b, c, h, w], d).unwrap())]
            }),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::grad_check;

    #[test]
    fn constant_image_stays_constant() {
        let x = Tensor::<f64>::full(&[1, 2, 3, 5], 5.0);
        for method in [InterpMethod::Bilinear, InterpMethod::Bicubic] {
            for factor in 1..5 {
                let y = interp_upsample(&x, method, factor).unwrap();
                assert_eq!(y.shape(), &[1, 2, 3 * factor, 5 * factor]);
                assert!(
                    y.data().iter().all(|&v| (v - 5.0).abs() < 1e-12),
                    "{method:?} x{factor}"
                );
            }
        }
    }

    #[test]
    fn bilinear_align_corners_ramp() {
        // Frozen by hand: src = o * (2-1)/(4-1) = o/3.
        let x = Tensor::<f64>::from_f64(&[1, 1, 2, 2], &[0.0, 1.0, 0.0, 1.0]).unwrap();
        let y = interp_upsample(&x, InterpMethod::Bilinear, 2).unwrap();
        let expect = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
        for row in y.data().chunks(4) {
            for (a, e) in row.iter().zip(expect) {
                assert!((a - e).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn bilinear_exact_on_affine_ramps() {
        let (h, w) = (5, 7);
        let data: Vec<f64> = (0..h * w)
            .map(|i| 2.0 * (i / w) as f64 - 0.5 * (i % w) as f64 + 1.0)
            .collect();
        let x = Tensor::from_f64(&[1, 1, h, w], &data).unwrap();
        let y = interp_upsample(&x, InterpMethod::Bilinear, 3).unwrap();
        let (oh, ow) = (h * 3, w * 3);
        for oy in 0..oh {
            for ox in 0..ow {
                let sy = oy as f64 * (h - 1) as f64 / (oh - 1) as f64;
                let sx = ox as f64 * (w - 1) as f64 / (ow - 1) as f64;
                let expect: f64 = 2.0 * sy - 0.5 * sx + 1.0;
                let got: f64 = y.data()[oy * ow + ox];
                assert!((got - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bicubic_rows_sum_to_one() {
        for (i, o) in [(2, 4), (5, 20), (60, 120)] {
            let m = interp_matrix(InterpMethod::Bicubic, i, o);
            for row in m.chunks(i) {
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn keys_kernel_interpolates_samples() {
        assert_eq!(keys_cubic(0.0), 1.0);
        assert!(keys_cubic(1.0).abs() < 1e-15);
        assert!(keys_cubic(2.0).abs() < 1e-15);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let data: Vec<f64> = (0..12).map(|i| (i as f64 * 0.9).sin()).collect();
        let x = Tensor::from_f64(&[1, 1, 3, 4], &data).unwrap();
        let probe: Vec<f64> = (0..48).map(|i| (i as f64 * 0.3).cos()).collect();
        let probe = Tensor::from_f64(&[1, 1, 6, 8], &probe).unwrap();
        for method in [InterpMethod::Bilinear, InterpMethod::Bicubic] {
            let err = grad_check(
                |v| {
                    let p = v.tape().constant(probe.clone());
                    Ok(v.interp_upsample(method, 2)?.mul(&p)?.sum())
                },
                &x,
                1e-5,
            )
            .unwrap();
            assert!(err < 1e-4, "{method:?}: {err}");
        }
    }
}
