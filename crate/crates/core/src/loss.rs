//! Content and adversarial losses.
//!
//! All losses are minimized. The discriminator objective is implemented as the
//! negative of the log-likelihood it maximizes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Element, Var};

/// Probabilities are clamped into `[LOG_EPS, 1 - LOG_EPS]` before taking logs.
pub const LOG_EPS: f64 = 1e-7;

/// Weight of the content loss in the adversarial total.
pub const DEFAULT_LAMBDA: f64 = 1e-2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossMode {
    ContentOnly,
    Gan,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub mode: LossMode,
    pub lambda: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            mode: LossMode::ContentOnly,
            lambda: DEFAULT_LAMBDA,
        }
    }
}

impl LossConfig {
    pub fn gan(lambda: f64) -> Self {
        LossConfig {
            mode: LossMode::Gan,
            lambda,
        }
    }

    /// `lambda = 0` is accepted for the pure-adversarial ablation (known not to converge).
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!(
                "lambda must be finite and non-negative, got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// Half mean squared error per pixel, averaged over the batch:
/// `1/(2MN) * sum (hr - sr)^2` for each `(1, M, N)` image.
pub fn mse_loss<'t, T: Element>(t_hr: &Var<'t, T>, t_sr: &Var<'t, T>) -> Result<Var<'t, T>> {
    let (a, b) = (t_hr.shape(), t_sr.shape());
    if a != b {
        return Err(Error::shape("mse_loss", &a, &b));
    }
    Ok(t_hr.sub(t_sr)?.square().mean().scale(T::of(0.5)))
}

fn clamp_prob<'t, T: Element>(p: &Var<'t, T>) -> Var<'t, T> {
    p.clamp(T::of(LOG_EPS), T::of(1.0 - LOG_EPS))
}

/// `-E[log D(real)] - E[log(1 - D(fake))]`.
pub fn discriminator_loss<'t, T: Element>(
    d_real: &Var<'t, T>,
    d_fake: &Var<'t, T>,
) -> Result<Var<'t, T>> {
    let real = clamp_prob(d_real).ln().mean();
    let fake = clamp_prob(d_fake).neg().add_scalar(T::one()).ln().mean();
    Ok(real.add(&fake)?.neg())
}

/// Non-saturating generator loss `-1/2 * E[log D(fake)]`.
pub fn generator_adv_loss<'t, T: Element>(d_fake: &Var<'t, T>) -> Result<Var<'t, T>> {
    Ok(clamp_prob(d_fake).ln().mean().scale(T::of(-0.5)))
}

/// `l_gen + lambda * l_mse` in GAN mode; `l_mse` alone in content-only mode.
pub fn total_loss<'t, T: Element>(
    l_gen: Option<&Var<'t, T>>,
    l_mse: &Var<'t, T>,
    cfg: &LossConfig,
) -> Result<Var<'t, T>> {
    match cfg.mode {
        LossMode::ContentOnly => Ok(*l_mse),
        LossMode::Gan => {
            let l_gen = l_gen.ok_or_else(|| {
                Error::Contract("GAN-mode total loss needs the adversarial term".into())
            })?;
            l_gen.add(&l_mse.scale(T::of(cfg.lambda)))
        }
    }
}
