//! RMSProp (generator) and plain SGD (discriminator), plus the learning-rate schedule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::param::ParamStore;
use crate::tensor::{Element, Tensor};

pub const RMSPROP_ALPHA: f64 = 0.9;
pub const RMSPROP_EPS: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimizerKind {
    RmsProp { alpha: f64 },
    Sgd,
}

impl OptimizerKind {
    pub fn rmsprop() -> Self {
        OptimizerKind::RmsProp {
            alpha: RMSPROP_ALPHA,
        }
    }
}

#[derive(Clone, Debug)]
pub struct OptimizerState<T: Element = f32> {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    /// Squared-gradient running averages, one per parameter (empty for SGD).
    pub accumulators: Vec<Tensor<T>>,
    pub steps: u64,
}

impl<T: Element> OptimizerState<T> {
    pub fn new(kind: OptimizerKind, learning_rate: f64, params: &ParamStore<T>) -> Result<Self> {
        if !(learning_rate > 0.0 && learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {learning_rate}"
            )));
        }
        let accumulators = match kind {
            OptimizerKind::RmsProp { alpha } => {
                if !(0.0..1.0).contains(&alpha) {
                    return Err(Error::Config(format!(
                        "rmsprop alpha must be in [0, 1), got {alpha}"
                    )));
                }
                params
                    .iter()
                    .map(|(_, p)| Tensor::zeros(p.value.shape()))
                    .collect()
            }
            OptimizerKind::Sgd => Vec::new(),
        };
        Ok(OptimizerState {
            kind,
            learning_rate,
            accumulators,
            steps: 0,
        })
    }

    pub fn set_learning_rate(&mut self, lr: f64) {
        self.learning_rate = lr;
    }

    /// Applies one update from the gradients left by the last backward pass.
    pub fn step(&mut self, params: &mut ParamStore<T>) -> Result<()> {
        let lr = T::of(self.learning_rate);
        let params = params.take_for_update()?;
        match self.kind {
            OptimizerKind::Sgd => {
                for p in params.iter_mut() {
                    for (v, &g) in p.value.data_mut().iter_mut().zip(p.grad.data()) {
                        *v = *v - lr * g;
                    }
                }
            }
            OptimizerKind::RmsProp { alpha } => {
                if self.accumulators.len() != params.len() {
                    return Err(Error::State(
                        "optimizer state does not match the parameter set".into(),
                    ));
                }
                let (alpha, eps) = (T::of(alpha), T::of(RMSPROP_EPS));
                let one_minus = T::one() - alpha;
                for (p, acc) in params.iter_mut().zip(&mut self.accumulators) {
                    if acc.shape() != p.value.shape() {
                        return Err(Error::shape(
                            "rmsprop accumulator",
                            acc.shape(),
                            p.value.shape(),
                        ));
                    }
                    let grads = p.grad.data();
                    for ((v, a), &g) in p.value.data_mut().iter_mut().zip(acc.data_mut()).zip(grads)
                    {
                        *a = alpha * *a + one_minus * g * g;
                        *v = *v - lr * g / (a.sqrt() + eps);
                    }
                }
            }
        }
        self.steps += 1;
        Ok(())
    }
}

/// Geometric per-epoch decay from `start` to `end` across `epochs` epochs
/// (epoch 0 uses `start`, the last epoch uses `end`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LrSchedule {
    pub start: f64,
    pub end: f64,
    pub epochs: usize,
}

impl Default for LrSchedule {
    fn default() -> Self {
        LrSchedule {
            start: 1e-4,
            end: 1e-6,
            epochs: 1,
        }
    }
}

impl LrSchedule {
    pub fn at(&self, epoch: usize) -> f64 {
        if self.epochs <= 1 {
            return self.start;
        }
        let t = epoch.min(self.epochs - 1) as f64 / (self.epochs - 1) as f64;
        self.start * (self.end / self.start).powf(t)
    }
}
