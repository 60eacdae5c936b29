//! Thermal image super-resolution with optional visual (RGB) guidance.
//!
//! The crate bundles everything needed to train and study x4 thermal
//! super-resolution networks on a desktop CPU:
//!
//! - [`tensor`]: NCHW tensors with tape-based reverse-mode autodiff.
//! - [`nn`]: convolution, transposed convolution, sub-pixel shuffle, fixed
//!   interpolation, pooling and dense layers.
//! - [`models`]: generator variants (thermal-only, visual-thermal fusion,
//!   residual-learning schemes) and the discriminator.
//! - [`loss`] and [`optim`]: content/adversarial losses, RMSProp and SGD.
//! - [`data`]: on-disk sample format, Gaussian-pyramid LR synthesis, batching,
//!   and a synthetic scene generator.
//! - [`metrics`]: PSNR and SSIM.
//! - [`train`], [`checkpoint`], [`runner`]: training loop, checkpoints, inference and evaluation.
//! - [`study`]: pairwise preference study (assignments, ballots, aggregation, HTTP service).

pub mod checkpoint;
pub mod config;
pub mod data;
pub mod error;
pub mod loss;
pub mod metrics;
pub mod models;
pub mod nn;
pub mod optim;
pub mod param;
pub mod runner;
pub mod study;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use param::{ParamId, ParamStore, Parameter, Session};
pub use tensor::{Element, Gradients, Precision, Tape, Tensor, Var};
