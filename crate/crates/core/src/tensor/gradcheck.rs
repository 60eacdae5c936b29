use super::{Tape, Tensor, Var};
use crate::error::{Error, Result};

/// Floor of the relative-error denominator.
pub const GRAD_CHECK_EPS: f64 = 1e-12;

/// Compares the tape gradient of a scalar function with central finite
/// differences and returns `max_i |analytic_i - numeric_i| / max(|analytic_i|, |numeric_i|, eps)`.
///
/// Sample inputs away from non-smooth points (clamp edges, the ELU curvature jump at 0):
/// finite differences are meaningless there.
pub fn grad_check<F>(f: F, input: &Tensor<f64>, step: f64) -> Result<f64>
where
    F: for<'t> Fn(Var<'t, f64>) -> Result<Var<'t, f64>>,
{
    grad_check_with(f, input, step, GRAD_CHECK_EPS)
}

pub fn grad_check_with<F>(f: F, input: &Tensor<f64>, step: f64, eps: f64) -> Result<f64>
where
    F: for<'t> Fn(Var<'t, f64>) -> Result<Var<'t, f64>>,
{
    let analytic = {
        let tape = Tape::new();
        let x = tape.leaf(input.clone());
        let y = f(x)?;
        if y.value().numel() != 1 {
            return Err(Error::Contract(format!(
                "grad_check needs a scalar-valued function, got shape {:?}",
                y.shape()
            )));
        }
        tape.backward(&y)?.wrt(&x)
    };

    let eval = |t: Tensor<f64>| -> Result<f64> {
        let tape = Tape::new();
        let y = f(tape.constant(t))?;
        y.value().item()
    };

    let mut worst: f64 = 0.0;
    let mut probe = input.clone();
    for i in 0..input.numel() {
        let x0 = input.data()[i];
        probe.data_mut()[i] = x0 + step;
        let up = eval(probe.clone())?;
        probe.data_mut()[i] = x0 - step;
        let down = eval(probe.clone())?;
        probe.data_mut()[i] = x0;
        let numeric = (up - down) / (2.0 * step);
        let a = analytic.data()[i];
        let denom = a.abs().max(numeric.abs()).max(eps);
        worst = worst.max((a - numeric).abs() / denom);
    }
    Ok(worst)
}
