use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ModelGraph;
use crate::error::{Error, Result};
use crate::nn::{Conv2d, Conv2dSpec, Linear};
use crate::param::{ParamStore, Session};
use crate::tensor::{Element, Tape, Tensor, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscriminatorConfig {
    /// Width of the first conv; the ladder ends at `8 * base_channels`.
    pub base_channels: usize,
}

impl Default for DiscriminatorConfig {
    fn default() -> Self {
        DiscriminatorConfig { base_channels: 64 }
    }
}

/// Conv ladder `(in, out, stride)` in units of the base width; `0` in-channels means the image.
const LADDER: [(usize, usize, usize); 8] = [
    (0, 1, 1),
    (1, 1, 2),
    (1, 2, 1),
    (2, 2, 2),
    (2, 4, 1),
    (4, 4, 2),
    (4, 8, 1),
    (8, 8, 2),
];

/// Real/fake classifier: eight 3x3 convs (ELU), global average pool, two
/// dense layers, sigmoid.
#[derive(Clone, Debug)]
pub struct Discriminator<T: Element = f32> {
    pub config: DiscriminatorConfig,
    pub params: ParamStore<T>,
    convs: Vec<Conv2d>,
    dense1: Linear,
    dense2: Linear,
}

impl<T: Element> Discriminator<T> {
    pub fn build<R: Rng + ?Sized>(config: DiscriminatorConfig, rng: &mut R) -> Result<Self> {
        let b = config.base_channels;
        if b == 0 {
            return Err(Error::Config(
                "discriminator base_channels must be positive".into(),
            ));
        }
        let mut p = ParamStore::new();
        let convs = LADDER
            .iter()
            .enumerate()
            .map(|(i, &(cin, cout, stride))| {
                let cin = if cin == 0 { 1 } else { cin * b };
                let spec = Conv2dSpec::same(cin, cout * b, 3).with_stride(stride);
                Conv2d::new(&mut p, &format!("conv.{i}"), spec, rng)
            })
            .collect();
        let dense1 = Linear::new(&mut p, "dense1", 8 * b, 16 * b, rng);
        let dense2 = Linear::new(&mut p, "dense2", 16 * b, 1, rng);
        Ok(Discriminator {
            config,
            params: p,
            convs,
            dense1,
            dense2,
        })
    }

    /// `(B, 1, H, W)` to `(B, 1)` probabilities of being a real HR frame.
    pub fn forward<'t>(&self, s: &Session<'t, T>, x: Var<'t, T>) -> Result<Var<'t, T>> {
        let mut h = x;
        for conv in &self.convs {
            h = conv.forward(s, h)?.elu();
        }
        let h = h.adaptive_avg_pool((1, 1))?.flatten()?;
        let h = self.dense1.forward(s, h)?.elu();
        Ok(self.dense2.forward(s, h)?.sigmoid())
    }

    pub fn infer(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let tape = Tape::new();
        let s = Session::frozen(&tape, &self.params);
        let out = self.forward(&s, tape.constant(x.clone()))?;
        let value = (*out.value()).clone();
        Ok(value)
    }
}

impl<T: Element> ModelGraph<T> for Discriminator<T> {
    fn params(&self) -> &ParamStore<T> {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ParamStore<T> {
        &mut self.params
    }

    fn input_arity(&self) -> usize {
        1
    }
}
