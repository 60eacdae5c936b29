//! Binary checkpoints.
//!
//! Layout: the 8-byte magic `TSRCKPT1`, a little-endian `u64` header length,
//! a JSON header, then every tensor listed in the header as raw little-endian
//! scalars (4 or 8 bytes, per the header's precision) in listed order.
//!
//! The header echoes the full run configuration, so a checkpoint alone is
//! enough to rebuild the network it came from.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::models::{Discriminator, DiscriminatorConfig, Generator, GeneratorConfig};
use crate::optim::{OptimizerKind, OptimizerState};
use crate::param::ParamStore;
use crate::tensor::{Element, Precision, Tensor};
use crate::train::{Phase, Trainer};

const MAGIC: &[u8; 8] = b"TSRCKPT1";

/// Batch order is a pure function of the seed and a per-epoch stream, so
/// these two numbers are the whole RNG state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngState {
    pub seed: u64,
    pub stream: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerMeta {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    pub steps: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    /// `generator`, `discriminator`, `generator.opt` or `discriminator.opt`.
    pub group: String,
    pub name: String,
    pub shape: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub precision: Precision,
    pub run: RunConfig,
    pub generator: GeneratorConfig,
    pub discriminator: Option<DiscriminatorConfig>,
    pub phase: Phase,
    pub epoch: usize,
    pub step: u64,
    pub rng: RngState,
    pub generator_opt: Option<OptimizerMeta>,
    pub discriminator_opt: Option<OptimizerMeta>,
    pub tensors: Vec<TensorEntry>,
}

pub struct Checkpoint<T: Element = f32> {
    pub header: Header,
    pub tensors: Vec<Tensor<T>>,
}

fn push_store<T: Element>(
    group: &str,
    store: &ParamStore<T>,
    entries: &mut Vec<TensorEntry>,
    tensors: &mut Vec<Tensor<T>>,
) {
    for (_, p) in store.iter() {
        entries.push(TensorEntry {
            group: group.into(),
            name: p.name.clone(),
            shape: p.value.shape().to_vec(),
        });
        tensors.push(p.value.clone());
    }
}

fn push_opt<T: Element>(
    group: &str,
    store: &ParamStore<T>,
    opt: &OptimizerState<T>,
    entries: &mut Vec<TensorEntry>,
    tensors: &mut Vec<Tensor<T>>,
) -> OptimizerMeta {
    for ((_, p), acc) in store.iter().zip(&opt.accumulators) {
        entries.push(TensorEntry {
            group: group.into(),
            name: p.name.clone(),
            shape: acc.shape().to_vec(),
        });
        tensors.push(acc.clone());
    }
    OptimizerMeta {
        kind: opt.kind,
        learning_rate: opt.learning_rate,
        steps: opt.steps,
    }
}

impl<T: Element> Checkpoint<T> {
    pub fn from_trainer(t: &Trainer<T>) -> Self {
        let (mut entries, mut tensors) = (Vec::new(), Vec::new());
        push_store("generator", &t.generator.params, &mut entries, &mut tensors);
        let generator_opt = Some(push_opt(
            "generator.opt",
            &t.generator.params,
            &t.g_opt,
            &mut entries,
            &mut tensors,
        ));
        let mut discriminator_opt = None;
        if let Some(d) = &t.discriminator {
            push_store("discriminator", &d.params, &mut entries, &mut tensors);
            if let Some(opt) = &t.d_opt {
                discriminator_opt = Some(push_opt(
                    "discriminator.opt",
                    &d.params,
                    opt,
                    &mut entries,
                    &mut tensors,
                ));
            }
        }
        Checkpoint {
            header: Header {
                precision: T::PRECISION,
                run: t.config.clone(),
                generator: t.generator.config,
                discriminator: t.discriminator.as_ref().map(|d| d.config),
                phase: t.phase,
                epoch: t.epoch,
                step: t.step,
                rng: RngState {
                    seed: t.config.train.seed,
                    stream: t.epoch as u64,
                },
                generator_opt,
                discriminator_opt,
                tensors: entries,
            },
            tensors,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let header = serde_json::to_vec(&self.header).expect("header serializes");
        let width = match self.header.precision {
            Precision::F32 => 4,
            Precision::F64 => 8,
        };
        let total: usize = self.tensors.iter().map(Tensor::numel).sum();
        let mut bytes = Vec::with_capacity(16 + header.len() + total * width);
        bytes.extend_from_slice(MAGIC);
        bytes.extend_from_slice(&(header.len() as u64).to_le_bytes());
        bytes.extend_from_slice(&header);
        for t in &self.tensors {
            for v in t.data() {
                match self.header.precision {
                    Precision::F32 => {
                        bytes.extend_from_slice(&(v.to_f64_lossy() as f32).to_le_bytes())
                    }
                    Precision::F64 => bytes.extend_from_slice(&v.to_f64_lossy().to_le_bytes()),
                }
            }
        }
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        if bytes.len() < 16 || &bytes[..8] != MAGIC {
            return Err(Error::format(path, "not a checkpoint (bad magic)"));
        }
        let len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
        let body = bytes
            .get(16..16 + len)
            .ok_or_else(|| Error::format(path, "truncated header"))?;
        let header: Header = serde_json::from_slice(body)
            .map_err(|e| Error::format(path, format!("bad header: {e}")))?;
        let width = match header.precision {
            Precision::F32 => 4,
            Precision::F64 => 8,
        };
        let mut raw = &bytes[16 + len..];
        let mut tensors = Vec::with_capacity(header.tensors.len());
        for entry in &header.tensors {
            let n: usize = entry.shape.iter().product();
            if raw.len() < n * width {
                return Err(Error::format(
                    path,
                    format!("truncated data for {}.{}", entry.group, entry.name),
                ));
            }
            let (chunk, rest) = raw.split_at(n * width);
            raw = rest;
            let data = chunk
                .chunks_exact(width)
                .map(|b| match header.precision {
                    Precision::F32 => {
                        T::of(f32::from_le_bytes(b.try_into().expect("4 bytes")) as f64)
                    }
                    Precision::F64 => T::of(f64::from_le_bytes(b.try_into().expect("8 bytes"))),
                })
                .collect();
            tensors.push(Tensor::new(&entry.shape, data)?);
        }
        if !raw.is_empty() {
            return Err(Error::format(path, format!("{} trailing bytes", raw.len())));
        }
        Ok(Checkpoint { header, tensors })
    }

    fn group(&self, group: &str) -> impl Iterator<Item = (&TensorEntry, &Tensor<T>)> + '_ {
        let group = group.to_string();
        self.header
            .tensors
            .iter()
            .zip(&self.tensors)
            .filter(move |(e, _)| e.group == group)
    }

    fn fill(&self, group: &str, store: &mut ParamStore<T>) -> Result<()> {
        let mut seen = 0;
        for (entry, tensor) in self.group(group) {
            let id = store.by_name(&entry.name).ok_or_else(|| {
                Error::Config(format!(
                    "checkpoint has unknown parameter {group}.{}",
                    entry.name
                ))
            })?;
            let p = store.get_mut(id);
            if p.value.shape() != tensor.shape() {
                return Err(Error::shape(
                    "checkpoint parameter",
                    p.value.shape(),
                    tensor.shape(),
                ));
            }
            p.value = tensor.clone();
            seen += 1;
        }
        if seen != store.len() {
            return Err(Error::Config(format!(
                "checkpoint holds {seen} {group} parameters, the network has {}",
                store.len()
            )));
        }
        Ok(())
    }

    fn optimizer(
        &self,
        group: &str,
        meta: &OptimizerMeta,
        store: &ParamStore<T>,
    ) -> Result<OptimizerState<T>> {
        let mut opt = OptimizerState::new(meta.kind, meta.learning_rate, store)?;
        opt.steps = meta.steps;
        if let OptimizerKind::RmsProp { .. } = meta.kind {
            let accs: Vec<Tensor<T>> = self.group(group).map(|(_, t)| t.clone()).collect();
            if accs.len() != store.len() {
                return Err(Error::Config(format!(
                    "checkpoint optimizer state has {} slots",
                    accs.len()
                )));
            }
            for (acc, (_, p)) in accs.iter().zip(store.iter()) {
                if acc.shape() != p.value.shape() {
                    return Err(Error::shape(
                        "checkpoint optimizer slot",
                        acc.shape(),
                        p.value.shape(),
                    ));
                }
            }
            opt.accumulators = accs;
        }
        Ok(opt)
    }

    /// Rebuilds the generator alone (for inference and evaluation).
    pub fn generator(&self) -> Result<Generator<T>> {
        let mut g = Generator::build(self.header.generator, &mut rand::rng())?;
        self.fill("generator", &mut g.params)?;
        Ok(g)
    }

    /// Rebuilds the full training state.
    pub fn trainer(&self) -> Result<Trainer<T>> {
        let h = &self.header;
        let mut t = Trainer::new(h.run.clone())?;
        if t.generator.config != h.generator {
            return Err(Error::Config(
                "checkpoint generator differs from its run configuration".into(),
            ));
        }
        self.fill("generator", &mut t.generator.params)?;
        if let Some(meta) = &h.generator_opt {
            t.g_opt = self.optimizer("generator.opt", meta, &t.generator.params)?;
        }
        if let Some(cfg) = h.discriminator {
            let mut d = Discriminator::build(cfg, &mut rand::rng())?;
            self.fill("discriminator", &mut d.params)?;
            if let Some(meta) = &h.discriminator_opt {
                t.d_opt = Some(self.optimizer("discriminator.opt", meta, &d.params)?);
            }
            t.discriminator = Some(d);
        }
        t.phase = h.phase;
        t.epoch = h.epoch;
        t.step = h.step;
        Ok(t)
    }
}
