use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{DatasetManifest, SamplePair, Split};
use crate::error::{Error, Result};
use crate::tensor::{Element, Tensor};

/// Samples held in memory, LR inputs already synthesized.
#[derive(Clone, Debug)]
pub struct Dataset<T: Element = f32> {
    pub samples: Vec<SamplePair<T>>,
}

impl<T: Element> Dataset<T> {
    pub fn load(manifest: &DatasetManifest, split: Split) -> Result<Self> {
        let samples = manifest
            .split(split)
            .map(|e| SamplePair::load(manifest, e))
            .collect::<Result<Vec<_>>>()?;
        if samples.is_empty() {
            return Err(Error::Config(format!("manifest has no `{split}` samples")));
        }
        Ok(Dataset { samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn batch(&self, indices: &[usize]) -> Result<Batch<T>> {
        let pick = |f: fn(&SamplePair<T>) -> &Tensor<T>| -> Result<Tensor<T>> {
            let items: Vec<Tensor<T>> = indices
                .iter()
                .map(|&i| f(&self.samples[i]).clone())
                .collect();
            Tensor::stack_batch(&items)
        };
        Ok(Batch {
            ids: indices
                .iter()
                .map(|&i| self.samples[i].id.clone())
                .collect(),
            t_lr: pick(|s| &s.thermal_lr)?,
            rgb: pick(|s| &s.rgb)?,
            t_hr: pick(|s| &s.thermal_hr)?,
        })
    }
}

/// NCHW mini-batch.
#[derive(Clone, Debug)]
pub struct Batch<T: Element = f32> {
    pub ids: Vec<String>,
    pub t_lr: Tensor<T>,
    pub rgb: Tensor<T>,
    pub t_hr: Tensor<T>,
}

/// Index groups for one epoch: a seeded shuffle, chunked, short final batch kept.
pub fn batch_indices(n: usize, batch_size: usize, seed: u64, epoch: u64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch);
    order.shuffle(&mut rng);
    order
        .chunks(batch_size.max(1))
        .map(<[usize]>::to_vec)
        .collect()
}

pub fn batch_iter<T: Element>(
    data: &Dataset<T>,
    batch_size: usize,
    seed: u64,
    epoch: u64,
) -> impl Iterator<Item = Result<Batch<T>>> + '_ {
    batch_indices(data.len(), batch_size, seed, epoch)
        .into_iter()
        .map(move |idx| data.batch(&idx))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn benchmark_batch_count() {
        let b = batch_indices(512, 12, 7, 0);
        assert_eq!(b.len(), 43);
        assert_eq!(b.last().unwrap().len(), 8);
        let mut all: Vec<usize> = b.concat();
        all.sort_unstable();
        assert_eq!(all, (0..512).collect::<Vec<_>>());
    }

    #[test]
    fn seeded_order() {
        assert_eq!(batch_indices(512, 12, 3, 0), batch_indices(512, 12, 3, 0));
        assert_ne!(batch_indices(512, 12, 3, 0), batch_indices(512, 12, 4, 0));
        assert_ne!(batch_indices(512, 12, 3, 0), batch_indices(512, 12, 3, 1));
    }
}
