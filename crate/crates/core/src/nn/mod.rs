//! Layers and resampling primitives.
//!
//! Differentiable primitives are methods on [`Var`] (`conv2d`, `pixel_shuffle`,
//! `elu`, ...). The structs here own [`ParamId`]s in a [`ParamStore`] and apply
//! those primitives with a fixed configuration.

mod activation;
mod conv;
mod interp;
mod pool;
mod shuffle;

pub use activation::ELU_ALPHA;
pub use interp::{interp_matrix, interp_upsample, InterpMethod, BICUBIC_A};
pub use pool::concat;
pub use shuffle::{pixel_shuffle, pixel_unshuffle};

pub use crate::tensor::kernels::PadMode;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::param::{kaiming_normal, ParamId, ParamStore, Session};
use crate::tensor::{Element, Tensor, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Padding {
    pub mode: PadMode,
    pub amount: usize,
}

impl Padding {
    pub const NONE: Padding = Padding {
        mode: PadMode::Zero,
        amount: 0,
    };

    pub fn reflect(amount: usize) -> Self {
        Padding {
            mode: PadMode::Reflect,
            amount,
        }
    }

    pub fn zero(amount: usize) -> Self {
        Padding {
            mode: PadMode::Zero,
            amount,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conv2dSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: (usize, usize),
    pub stride: (usize, usize),
    pub padding: Padding,
}

impl Conv2dSpec {
    /// Square kernel, reflective "same" padding.
    pub fn same(in_channels: usize, out_channels: usize, kernel: usize) -> Self {
        Conv2dSpec {
            in_channels,
            out_channels,
            kernel: (kernel, kernel),
            stride: (1, 1),
            padding: Padding::reflect(kernel / 2),
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = (stride, stride);
        self
    }

    pub fn output_hw(&self, h: usize, w: usize) -> (usize, usize) {
        let p = self.padding.amount;
        (
            (h + 2 * p - self.kernel.0) / self.stride.0 + 1,
            (w + 2 * p - self.kernel.1) / self.stride.1 + 1,
        )
    }
}

#[derive(Clone, Debug)]
pub struct Conv2d {
    pub spec: Conv2dSpec,
    pub weight: ParamId,
    pub bias: ParamId,
}

impl Conv2d {
    pub fn new<T: Element, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        name: &str,
        spec: Conv2dSpec,
        rng: &mut R,
    ) -> Self {
        let (kh, kw) = spec.kernel;
        let fan_in = spec.in_channels * kh * kw;
        let weight = store.register(
            format!("{name}.weight"),
            kaiming_normal(&[spec.out_channels, spec.in_channels, kh, kw], fan_in, rng),
        );
        let bias = store.register(format!("{name}.bias"), Tensor::zeros(&[spec.out_channels]));
        Conv2d { spec, weight, bias }
    }

    pub fn forward<'t, T: Element>(&self, s: &Session<'t, T>, x: Var<'t, T>) -> Result<Var<'t, T>> {
        let channels = x.shape().get(1).copied();
        if channels != Some(self.spec.in_channels) {
            return Err(Error::Shape {
                op: "conv2d layer",
                lhs: x.shape(),
                rhs: vec![self.spec.in_channels],
            });
        }
        let (input, zero_pad) = match self.spec.padding.mode {
            PadMode::Reflect => (x.pad2d(self.spec.padding.amount, PadMode::Reflect)?, 0),
            PadMode::Zero => (x, self.spec.padding.amount),
        };
        input.conv2d(
            &s.param(self.weight),
            Some(&s.param(self.bias)),
            self.spec.stride,
            (zero_pad, zero_pad),
        )
    }
}

/// Learned x2 upsampling: kernel 4, stride 2, padding 1.
#[derive(Clone, Debug)]
pub struct TransposedConv2d {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    pub weight: ParamId,
    pub bias: ParamId,
}

impl TransposedConv2d {
    pub const KERNEL: usize = 4;
    pub const STRIDE: usize = 2;
    pub const PADDING: usize = 1;

    pub fn x2<T: Element, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        name: &str,
        in_channels: usize,
        out_channels: usize,
        rng: &mut R,
    ) -> Self {
        Self::new(
            store,
            name,
            in_channels,
            out_channels,
            Self::KERNEL,
            Self::STRIDE,
            Self::PADDING,
            rng,
        )
        .expect("k4/s2/p1 is an exact x2 configuration")
    }

    /// Fails unless the configuration multiplies spatial dims by exactly `stride`.
    #[allow(clippy::too_many_arguments)]
    pub fn new<T: Element, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        name: &str,
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        rng: &mut R,
    ) -> Result<Self> {
        // (H-1)s - 2p + k == sH  <=>  k == 2p + s
        if stride == 0 || kernel != 2 * padding + stride {
            return Err(Error::Config(format!(
                "transposed conv k={kernel} s={stride} p={padding} is not an exact x{stride} upsampler"
            )));
        }
        let fan_in = in_channels * kernel * kernel / (stride * stride);
        let weight = store.register(
            format!("{name}.weight"),
            kaiming_normal(&[in_channels, out_channels, kernel, kernel], fan_in, rng),
        );
        let bias = store.register(format!("{name}.bias"), Tensor::zeros(&[out_channels]));
        Ok(TransposedConv2d {
            in_channels,
            out_channels,
            kernel,
            stride,
            padding,
            weight,
            bias,
        })
    }

    pub fn forward<'t, T: Element>(&self, s: &Session<'t, T>, x: Var<'t, T>) -> Result<Var<'t, T>> {
        x.conv_transpose2d(
            &s.param(self.weight),
            Some(&s.param(self.bias)),
            (self.stride, self.stride),
            (self.padding, self.padding),
            (0, 0),
        )
    }
}

#[derive(Clone, Debug)]
pub struct Linear {
    pub in_features: usize,
    pub out_features: usize,
    pub weight: ParamId,
    pub bias: ParamId,
}

impl Linear {
    pub fn new<T: Element, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        name: &str,
        in_features: usize,
        out_features: usize,
        rng: &mut R,
    ) -> Self {
        let weight = store.register(
            format!("{name}.weight"),
            kaiming_normal(&[out_features, in_features], in_features, rng),
        );
        let bias = store.register(format!("{name}.bias"), Tensor::zeros(&[out_features]));
        Linear {
            in_features,
            out_features,
            weight,
            bias,
        }
    }

    pub fn forward<'t, T: Element>(&self, s: &Session<'t, T>, x: Var<'t, T>) -> Result<Var<'t, T>> {
        x.linear(&s.param(self.weight), Some(&s.param(self.bias)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpsampleMethod {
    Subpixel,
    TransposedConv,
    Bilinear,
    Bicubic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpsampleSpec {
    pub method: UpsampleMethod,
    pub factor: usize,
}

impl UpsampleSpec {
    pub fn x2(method: UpsampleMethod) -> Self {
        UpsampleSpec { method, factor: 2 }
    }

    pub fn validate(&self, in_channels: usize) -> Result<()> {
        if self.factor == 0 {
            return Err(Error::Config("upsample factor must be at least 1".into()));
        }
        if self.method == UpsampleMethod::Subpixel
            && !in_channels.is_multiple_of(self.factor * self.factor)
        {
            return Err(Error::Config(format!(
                "sub-pixel upsampling by {} needs channels divisible by {}, got {in_channels}",
                self.factor,
                self.factor * self.factor
            )));
        }
        if self.method == UpsampleMethod::TransposedConv && self.factor != TransposedConv2d::STRIDE
        {
            return Err(Error::Config(
                "transposed-conv upsampling is fixed at x2".into(),
            ));
        }
        Ok(())
    }
}
