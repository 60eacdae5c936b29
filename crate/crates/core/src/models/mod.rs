//! Generator variants and the discriminator.

mod config;
mod discriminator;
mod generator;

pub use config::{GeneratorConfig, Scheme, Variant};
pub use discriminator::{Discriminator, DiscriminatorConfig};
pub use generator::{Generator, ResidualBlock};

use rand::Rng;

use crate::error::Result;
use crate::param::ParamStore;
use crate::tensor::Element;

/// A compiled network: a fixed layer structure over a [`ParamStore`].
pub trait ModelGraph<T: Element> {
    fn params(&self) -> &ParamStore<T>;

    fn params_mut(&mut self) -> &mut ParamStore<T>;

    /// Number of input tensors `forward` expects.
    fn input_arity(&self) -> usize;

    /// Trainable scalar count.
    fn count_parameters(&self) -> usize {
        self.params().num_scalars()
    }
}

pub fn build_generator<T: Element, R: Rng + ?Sized>(
    config: GeneratorConfig,
    rng: &mut R,
) -> Result<Generator<T>> {
    Generator::build(config, rng)
}

/// The full-width discriminator (64 to 512 channels, dense 512 -> 1024 -> 1).
pub fn build_discriminator<T: Element, R: Rng + ?Sized>(rng: &mut R) -> Result<Discriminator<T>> {
    Discriminator::build(DiscriminatorConfig::default(), rng)
}
