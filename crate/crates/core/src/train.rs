//! Two-phase training: content-loss pre-training, then adversarial fine-tuning
//! with one discriminator step per generator step.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::data::{batch_indices, Batch, Dataset};
use crate::error::{Error, Result};
use crate::loss::{
    discriminator_loss, generator_adv_loss, mse_loss, total_loss, LossConfig, LossMode,
};
use crate::models::{Discriminator, Generator};
use crate::optim::{OptimizerKind, OptimizerState};
use crate::param::Session;
use crate::tensor::{Element, Tape, Tensor, Var};

/// Weight-initialization streams derived from the run seed.
const GENERATOR_STREAM: u64 = 0;
const DISCRIMINATOR_STREAM: u64 = 1;
/// Batch-order streams of the adversarial phase start here.
const GAN_EPOCH_OFFSET: u64 = 1 << 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Content,
    Gan,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Content => "content",
            Phase::Gan => "gan",
        })
    }
}

impl FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "content" => Ok(Phase::Content),
            "gan" => Ok(Phase::Gan),
            other => Err(Error::Usage(format!(
                "unknown phase `{other}` (expected content or gan)"
            ))),
        }
    }
}

/// One line of the loss log.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepLog {
    pub epoch: usize,
    pub step: u64,
    pub l_mse: f64,
    pub l_gen: Option<f64>,
    pub l_total: f64,
    pub lr: f64,
}

impl fmt::Display for StepLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t{:e}\t", self.epoch, self.step, self.l_mse)?;
        match self.l_gen {
            Some(g) => write!(f, "{g:e}")?,
            None => f.write_str("-")?,
        }
        write!(f, "\t{:e}\t{:e}", self.l_total, self.lr)
    }
}

/// Discriminator loss and real/fake accuracy on one batch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscriminatorStats {
    pub loss: f64,
    pub accuracy: f64,
}

fn finite(value: f64, what: &str, epoch: usize, step: u64, lr: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Numeric(format!(
            "{what} became {value} at epoch {epoch}, step {step} (learning rate {lr:e})"
        )))
    }
}

fn scalar<T: Element>(v: &Var<'_, T>) -> Result<f64> {
    Ok(v.value().item()?.to_f64_lossy())
}

pub struct Trainer<T: Element = f32> {
    pub config: RunConfig,
    pub generator: Generator<T>,
    pub discriminator: Option<Discriminator<T>>,
    pub g_opt: OptimizerState<T>,
    pub d_opt: Option<OptimizerState<T>>,
    pub phase: Phase,
    /// Completed epochs in the current phase.
    pub epoch: usize,
    /// Optimizer steps taken in the current phase.
    pub step: u64,
}

impl<T: Element> Trainer<T> {
    /// Fresh generator, content phase.
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.train.seed);
        rng.set_stream(GENERATOR_STREAM);
        let generator = Generator::build(config.model.generator(), &mut rng)?;
        let g_opt = OptimizerState::new(
            OptimizerKind::rmsprop(),
            config.content.lr_start,
            &generator.params,
        )?;
        Ok(Trainer {
            config,
            generator,
            discriminator: None,
            g_opt,
            d_opt: None,
            phase: Phase::Content,
            epoch: 0,
            step: 0,
        })
    }

    /// Switches to adversarial fine-tuning from the current generator weights:
    /// builds the discriminator and resets both optimizers.
    pub fn enter_gan(&mut self) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.train.seed);
        rng.set_stream(DISCRIMINATOR_STREAM);
        let d = Discriminator::build(self.config.model.discriminator(), &mut rng)?;
        let d_lr = self.config.discriminator_schedule().at(0);
        self.d_opt = Some(OptimizerState::new(OptimizerKind::Sgd, d_lr, &d.params)?);
        self.discriminator = Some(d);
        self.g_opt = OptimizerState::new(
            OptimizerKind::rmsprop(),
            self.config.gan.lr_start,
            &self.generator.params,
        )?;
        self.phase = Phase::Gan;
        self.epoch = 0;
        self.step = 0;
        Ok(())
    }

    fn rgb_for<'t>(&self, tape: &'t Tape<T>, batch: &Batch<T>) -> Option<Var<'t, T>> {
        self.generator
            .config
            .fusion
            .then(|| tape.constant(batch.rgb.clone()))
    }

    /// Super-resolves a batch without recording gradients.
    pub fn super_resolve(&self, batch: &Batch<T>) -> Result<Tensor<T>> {
        let rgb = self.generator.config.fusion.then_some(&batch.rgb);
        self.generator.infer(&batch.t_lr, rgb)
    }

    /// One content-loss step.
    pub fn content_step(&mut self, batch: &Batch<T>, lr: f64) -> Result<StepLog> {
        let tape = Tape::new();
        let (l_mse, grads) = {
            let s = Session::new(&tape, &self.generator.params);
            let sr = self.generator.forward(
                &s,
                tape.constant(batch.t_lr.clone()),
                self.rgb_for(&tape, batch),
            )?;
            let loss = mse_loss(&tape.constant(batch.t_hr.clone()), &sr)?;
            let value = finite(scalar(&loss)?, "content loss", self.epoch, self.step, lr)?;
            (value, tape.backward(&loss)?)
        };
        self.generator.params.set_grads(&grads);
        self.g_opt.set_learning_rate(lr);
        self.g_opt.step(&mut self.generator.params)?;
        Ok(StepLog {
            epoch: self.epoch,
            step: self.step,
            l_mse,
            l_gen: None,
            l_total: l_mse,
            lr,
        })
    }

    fn discriminator(&self) -> Result<&Discriminator<T>> {
        self.discriminator
            .as_ref()
            .ok_or_else(|| Error::State("adversarial step outside the GAN phase".into()))
    }

    /// Discriminator loss and accuracy against the current generator, without updating.
    pub fn evaluate_discriminator(&self, batch: &Batch<T>) -> Result<DiscriminatorStats> {
        let d = self.discriminator()?;
        let sr = self.super_resolve(batch)?;
        let tape = Tape::new();
        let s = Session::frozen(&tape, &d.params);
        let real = d.forward(&s, tape.constant(batch.t_hr.clone()))?;
        let fake = d.forward(&s, tape.constant(sr))?;
        stats(&real, &fake)
    }

    /// One SGD step of the discriminator on real HR frames versus current SR outputs.
    pub fn discriminator_step(&mut self, batch: &Batch<T>, lr: f64) -> Result<DiscriminatorStats> {
        let sr = self.super_resolve(batch)?;
        let d = self.discriminator()?;
        let tape = Tape::new();
        let (result, grads) = {
            let s = Session::new(&tape, &d.params);
            let real = d.forward(&s, tape.constant(batch.t_hr.clone()))?;
            let fake = d.forward(&s, tape.constant(sr))?;
            let loss = discriminator_loss(&real, &fake)?;
            let mut result = stats(&real, &fake)?;
            result.loss = finite(
                scalar(&loss)?,
                "discriminator loss",
                self.epoch,
                self.step,
                lr,
            )?;
            (result, tape.backward(&loss)?)
        };
        let d = self.discriminator.as_mut().expect("checked above");
        let opt = self
            .d_opt
            .as_mut()
            .ok_or_else(|| Error::State("missing discriminator optimizer".into()))?;
        d.params.set_grads(&grads);
        opt.set_learning_rate(lr);
        opt.step(&mut d.params)?;
        Ok(result)
    }

    /// One generator step on `l_gen + lambda * l_mse` with the discriminator frozen.
    pub fn generator_step(&mut self, batch: &Batch<T>, lr: f64) -> Result<StepLog> {
        let d = self.discriminator()?;
        let cfg = LossConfig {
            mode: LossMode::Gan,
            lambda: self.config.gan.lambda,
        };
        let tape = Tape::new();
        let (log, grads) = {
            let gs = Session::new(&tape, &self.generator.params);
            let ds = Session::frozen(&tape, &d.params);
            let sr = self.generator.forward(
                &gs,
                tape.constant(batch.t_lr.clone()),
                self.rgb_for(&tape, batch),
            )?;
            let l_mse = mse_loss(&tape.constant(batch.t_hr.clone()), &sr)?;
            let l_gen = generator_adv_loss(&d.forward(&ds, sr)?)?;
            let total = total_loss(Some(&l_gen), &l_mse, &cfg)?;
            let log = StepLog {
                epoch: self.epoch,
                step: self.step,
                l_mse: scalar(&l_mse)?,
                l_gen: Some(scalar(&l_gen)?),
                l_total: finite(scalar(&total)?, "total loss", self.epoch, self.step, lr)?,
                lr,
            };
            (log, tape.backward(&total)?)
        };
        self.generator.params.set_grads(&grads);
        self.g_opt.set_learning_rate(lr);
        self.g_opt.step(&mut self.generator.params)?;
        Ok(log)
    }

    fn budget(&self) -> (usize, Option<usize>) {
        match self.phase {
            Phase::Content => (self.config.content.epochs, self.config.content.max_steps),
            Phase::Gan => (self.config.gan.epochs, self.config.gan.max_steps),
        }
    }

    /// Runs the current phase to the end of its budget, writing one log line
    /// per step. Resumes from `self.epoch` when restored from a checkpoint.
    pub fn fit(&mut self, data: &Dataset<T>, log: &mut dyn Write) -> Result<Vec<StepLog>> {
        self.fit_until(data, log, |_| false)
    }

    /// Like [`Trainer::fit`], stopping early once `stop` holds for a step.
    pub fn fit_until(
        &mut self,
        data: &Dataset<T>,
        log: &mut dyn Write,
        stop: impl Fn(&StepLog) -> bool,
    ) -> Result<Vec<StepLog>> {
        let (epochs, max_steps) = self.budget();
        let max_steps = max_steps.map_or(u64::MAX, |m| m as u64);
        let mut history = Vec::new();
        while self.epoch < epochs {
            let key = match self.phase {
                Phase::Content => self.epoch as u64,
                Phase::Gan => GAN_EPOCH_OFFSET + self.epoch as u64,
            };
            for idx in batch_indices(
                data.len(),
                self.config.train.batch_size,
                self.config.train.seed,
                key,
            ) {
                if self.step >= max_steps {
                    return Ok(history);
                }
                let batch = data.batch(&idx)?;
                let record = match self.phase {
                    Phase::Content => {
                        self.content_step(&batch, self.config.content_schedule().at(self.epoch))?
                    }
                    Phase::Gan => {
                        self.discriminator_step(
                            &batch,
                            self.config.discriminator_schedule().at(self.epoch),
                        )?;
                        self.generator_step(
                            &batch,
                            self.config.generator_gan_schedule().at(self.epoch),
                        )?
                    }
                };
                writeln!(log, "{record}").map_err(|e| Error::io("loss log", e))?;
                self.step += 1;
                history.push(record);
                if stop(&record) {
                    return Ok(history);
                }
            }
            self.epoch += 1;
        }
        Ok(history)
    }
}

fn stats<T: Element>(real: &Var<'_, T>, fake: &Var<'_, T>) -> Result<DiscriminatorStats> {
    let (r, f) = (real.value(), fake.value());
    let half = T::of(0.5);
    let correct = r.data().iter().filter(|&&p| p > half).count()
        + f.data().iter().filter(|&&p| p < half).count();
    let tape = real.tape();
    let loss = discriminator_loss(&tape.constant((*r).clone()), &tape.constant((*f).clone()))?;
    Ok(DiscriminatorStats {
        loss: scalar(&loss)?,
        accuracy: correct as f64 / (r.numel() + f.numel()) as f64,
    })
}
