use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::UpsampleMethod;

/// Where in the network the x4 resolution increase happens.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Process at LR, upsample features at the end.
    LowresThenUpsample,
    /// Upsample first, process at HR.
    UpsampleThenProcess,
    /// Upsample the input image, predict a residual at LR and add it back.
    ResidualGlobal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    /// Visual-thermal fusion: the generator takes an RGB frame at HR size.
    pub fusion: bool,
    pub scheme: Scheme,
    /// How the input is brought to HR (front-upsample and residual schemes).
    pub input_upsample: Option<UpsampleMethod>,
    /// How LR features are brought to HR (low-res and residual schemes).
    pub output_upsample: Option<UpsampleMethod>,
    pub n_residual_blocks: usize,
    pub base_channels: usize,
    pub scale: usize,
}

impl GeneratorConfig {
    pub const SCALE: usize = 4;

    pub fn tsrcnn() -> Self {
        GeneratorConfig {
            fusion: false,
            scheme: Scheme::LowresThenUpsample,
            input_upsample: None,
            output_upsample: Some(UpsampleMethod::Subpixel),
            n_residual_blocks: 5,
            base_channels: 64,
            scale: Self::SCALE,
        }
    }

    pub fn vtsrcnn() -> Self {
        GeneratorConfig {
            fusion: true,
            ..Self::tsrcnn()
        }
    }

    /// Two learned x2 deconvolutions up front, residual stack at HR.
    pub fn front_deconv() -> Self {
        GeneratorConfig {
            scheme: Scheme::UpsampleThenProcess,
            input_upsample: Some(UpsampleMethod::TransposedConv),
            output_upsample: None,
            ..Self::tsrcnn()
        }
    }

    pub fn residual(input: UpsampleMethod, output: UpsampleMethod) -> Self {
        GeneratorConfig {
            scheme: Scheme::ResidualGlobal,
            input_upsample: Some(input),
            output_upsample: Some(output),
            ..Self::tsrcnn()
        }
    }

    pub fn with_size(mut self, n_residual_blocks: usize, base_channels: usize) -> Self {
        self.n_residual_blocks = n_residual_blocks;
        self.base_channels = base_channels;
        self
    }

    pub fn input_arity(&self) -> usize {
        if self.fusion {
            2
        } else {
            1
        }
    }

    pub fn validate(&self) -> Result<()> {
        use UpsampleMethod::*;
        let fail = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.scale != Self::SCALE {
            return fail("only x4 generators are supported (two x2 stages)");
        }
        if self.base_channels == 0 {
            return fail("base_channels must be positive");
        }
        match self.scheme {
            Scheme::LowresThenUpsample => {
                if self.input_upsample.is_some() {
                    return fail("low-res scheme takes no input upsampler");
                }
                match self.output_upsample {
                    Some(Subpixel | TransposedConv) => {}
                    _ => {
                        return fail(
                            "low-res scheme needs a subpixel or transposed_conv output upsampler",
                        )
                    }
                }
            }
            Scheme::UpsampleThenProcess => {
                if self.fusion {
                    return fail("fusion is only wired for the low-res and residual schemes");
                }
                if self.output_upsample.is_some() {
                    return fail("front-upsample scheme takes no output upsampler");
                }
                match self.input_upsample {
                    Some(TransposedConv | Bilinear | Bicubic) => {}
                    _ => return fail("front-upsample scheme needs a transposed_conv, bilinear or bicubic input upsampler"),
                }
            }
            Scheme::ResidualGlobal => {
                match self.input_upsample {
                    Some(TransposedConv | Bilinear | Bicubic) => {}
                    _ => return fail(
                        "residual scheme needs an input upsampler so the skip matches the output",
                    ),
                }
                match self.output_upsample {
                    Some(Subpixel | TransposedConv) => {}
                    _ => {
                        return fail(
                            "residual scheme needs a subpixel or transposed_conv output upsampler",
                        )
                    }
                }
            }
        }
        Ok(())
    }
}

/// Named generator variants of the ablation study.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Tsrcnn,
    Vtsrcnn,
    FrontDeconv,
    InpDconvRes,
    InpBilinRes,
    InpBicubRes,
    AllDconvRes,
}

impl Variant {
    pub const ALL: [Variant; 7] = [
        Variant::Tsrcnn,
        Variant::Vtsrcnn,
        Variant::FrontDeconv,
        Variant::InpDconvRes,
        Variant::InpBilinRes,
        Variant::InpBicubRes,
        Variant::AllDconvRes,
    ];

    pub fn config(self) -> GeneratorConfig {
        use UpsampleMethod::*;
        match self {
            Variant::Tsrcnn => GeneratorConfig::tsrcnn(),
            Variant::Vtsrcnn => GeneratorConfig::vtsrcnn(),
            Variant::FrontDeconv => GeneratorConfig::front_deconv(),
            Variant::InpDconvRes => GeneratorConfig::residual(TransposedConv, Subpixel),
            Variant::InpBilinRes => GeneratorConfig::residual(Bilinear, Subpixel),
            Variant::InpBicubRes => GeneratorConfig::residual(Bicubic, Subpixel),
            Variant::AllDconvRes => GeneratorConfig::residual(TransposedConv, TransposedConv),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Tsrcnn => "TSRCNN",
            Variant::Vtsrcnn => "VTSRCNN",
            Variant::FrontDeconv => "TSRCNN-FrontDconv",
            Variant::InpDconvRes => "InpDconv-TSRCNNres",
            Variant::InpBilinRes => "InpBilin-TSRCNNres",
            Variant::InpBicubRes => "InpBicub-TSRCNNres",
            Variant::AllDconvRes => "AllDconv-TSRCNNres",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        Variant::ALL
            .into_iter()
            .find(|v| {
                let name: String = v
                    .name()
                    .chars()
                    .filter(|c| c.is_ascii_alphanumeric())
                    .collect();
                let snake = serde_json::to_string(v)
                    .unwrap_or_default()
                    .replace(['"', '_'], "");
                name.to_ascii_lowercase() == key || snake == key
            })
            .ok_or_else(|| Error::Config(format!("unknown generator variant `{s}`")))
    }
}
