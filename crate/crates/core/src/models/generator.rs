use rand::Rng;

use super::{GeneratorConfig, ModelGraph, Scheme};
use crate::error::{Error, Result};
use crate::nn::{concat, Conv2d, Conv2dSpec, InterpMethod, TransposedConv2d, UpsampleMethod};
use crate::param::{ParamStore, Session};
use crate::tensor::{Element, Tape, Tensor, Var};

/// conv3x3 + ELU, conv3x3, additive skip.
#[derive(Clone, Debug)]
pub struct ResidualBlock {
    pub conv1: Conv2d,
    pub conv2: Conv2d,
}

impl ResidualBlock {
    fn forward<'t, T: Element>(&self, s: &Session<'t, T>, x: Var<'t, T>) -> Result<Var<'t, T>> {
        let h = self.conv1.forward(s, x)?.elu();
        let h = self.conv2.forward(s, h)?;
        x.add(&h)
    }
}

#[derive(Clone, Debug)]
enum UpStage {
    /// conv to `c * 4` channels, pixel shuffle by 2, ELU.
    Subpixel(Conv2d),
    /// learned x2 deconvolution, ELU.
    Transposed(TransposedConv2d),
}

impl UpStage {
    fn forward<'t, T: Element>(&self, s: &Session<'t, T>, x: Var<'t, T>) -> Result<Var<'t, T>> {
        match self {
            UpStage::Subpixel(conv) => Ok(conv.forward(s, x)?.pixel_shuffle(2)?.elu()),
            UpStage::Transposed(t) => Ok(t.forward(s, x)?.elu()),
        }
    }
}

/// RGB encoder: two stride-2 3x3 convs + ELU, bringing the HR colour frame down
/// to the thermal LR grid.
#[derive(Clone, Debug)]
struct FusionBranch {
    rgb1: Conv2d,
    rgb2: Conv2d,
    merge: Conv2d,
}

/// How the image itself reaches HR size.
#[derive(Clone, Debug)]
enum InputUpsample {
    Interp(InterpMethod),
    /// Two 1->1 deconvolutions, no activation (the output is an image).
    Learned(TransposedConv2d, TransposedConv2d),
}

impl InputUpsample {
    fn forward<'t, T: Element>(&self, s: &Session<'t, T>, x: Var<'t, T>) -> Result<Var<'t, T>> {
        match self {
            InputUpsample::Interp(m) => x.interp_upsample(*m, 2)?.interp_upsample(*m, 2),
            InputUpsample::Learned(a, b) => b.forward(s, a.forward(s, x)?),
        }
    }
}

/// Thermal super-resolution generator, optionally guided by an RGB frame.
#[derive(Clone, Debug)]
pub struct Generator<T: Element = f32> {
    pub config: GeneratorConfig,
    pub params: ParamStore<T>,
    input_up: Option<InputUpsample>,
    head: Conv2d,
    fusion: Option<FusionBranch>,
    /// Front-upsample scheme: learned x2 feature deconvs after the head.
    front: Vec<TransposedConv2d>,
    pub blocks: Vec<ResidualBlock>,
    ups: Vec<UpStage>,
    pub tail: Conv2d,
}

impl<T: Element> Generator<T> {
    pub fn build<R: Rng + ?Sized>(config: GeneratorConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let c = config.base_channels;
        let mut p = ParamStore::new();

        let input_up = match (config.scheme, config.input_upsample) {
            (Scheme::LowresThenUpsample, _) | (_, None) => None,
            (Scheme::UpsampleThenProcess, Some(UpsampleMethod::TransposedConv)) => None,
            (_, Some(UpsampleMethod::Bilinear)) => {
                Some(InputUpsample::Interp(InterpMethod::Bilinear))
            }
            (_, Some(UpsampleMethod::Bicubic)) => {
                Some(InputUpsample::Interp(InterpMethod::Bicubic))
            }
            (_, Some(UpsampleMethod::TransposedConv)) => Some(InputUpsample::Learned(
                TransposedConv2d::x2(&mut p, "input_up.0", 1, 1, rng),
                TransposedConv2d::x2(&mut p, "input_up.1", 1, 1, rng),
            )),
            (_, Some(UpsampleMethod::Subpixel)) => {
                return Err(Error::Config(
                    "sub-pixel cannot upsample a 1-channel input".into(),
                ))
            }
        };

        let head = Conv2d::new(&mut p, "head", Conv2dSpec::same(1, c, 3), rng);
        let fusion = config.fusion.then(|| FusionBranch {
            rgb1: Conv2d::new(
                &mut p,
                "fusion.rgb1",
                Conv2dSpec::same(3, c, 3).with_stride(2),
                rng,
            ),
            rgb2: Conv2d::new(
                &mut p,
                "fusion.rgb2",
                Conv2dSpec::same(c, c, 3).with_stride(2),
                rng,
            ),
            merge: Conv2d::new(&mut p, "fusion.merge", Conv2dSpec::same(2 * c, c, 1), rng),
        });
        let front = if config.scheme == Scheme::UpsampleThenProcess
            && config.input_upsample == Some(UpsampleMethod::TransposedConv)
        {
            (0..2)
                .map(|i| TransposedConv2d::x2(&mut p, &format!("front.{i}"), c, c, rng))
                .collect()
        } else {
            Vec::new()
        };
        let blocks = (0..config.n_residual_blocks)
            .map(|i| ResidualBlock {
                conv1: Conv2d::new(
                    &mut p,
                    &format!("blocks.{i}.conv1"),
                    Conv2dSpec::same(c, c, 3),
                    rng,
                ),
                conv2: Conv2d::new(
                    &mut p,
                    &format!("blocks.{i}.conv2"),
                    Conv2dSpec::same(c, c, 3),
                    rng,
                ),
            })
            .collect();
        let ups = match config.output_upsample {
            None => Vec::new(),
            Some(UpsampleMethod::Subpixel) => (0..2)
                .map(|i| {
                    UpStage::Subpixel(Conv2d::new(
                        &mut p,
                        &format!("up.{i}"),
                        Conv2dSpec::same(c, 4 * c, 3),
                        rng,
                    ))
                })
                .collect(),
            Some(UpsampleMethod::TransposedConv) => (0..2)
                .map(|i| {
                    UpStage::Transposed(TransposedConv2d::x2(&mut p, &format!("up.{i}"), c, c, rng))
                })
                .collect(),
            Some(other) => {
                return Err(Error::Config(format!(
                    "{other:?} is not a feature upsampler"
                )))
            }
        };
        let tail = Conv2d::new(&mut p, "tail", Conv2dSpec::same(c, 1, 3), rng);

        Ok(Generator {
            config,
            params: p,
            input_up,
            head,
            fusion,
            front,
            blocks,
            ups,
            tail,
        })
    }

    /// Maps `thermal` `(B, 1, H, W)` (plus `rgb` `(B, 3, 4H, 4W)` for fusion
    /// models) to `(B, 1, 4H, 4W)`.
    pub fn forward<'t>(
        &self,
        s: &Session<'t, T>,
        thermal: Var<'t, T>,
        rgb: Option<Var<'t, T>>,
    ) -> Result<Var<'t, T>> {
        let ts = thermal.shape();
        let [_, 1, h, w] = ts[..] else {
            return Err(Error::Shape {
                op: "generator thermal input",
                lhs: ts,
                rhs: vec![0, 1, 0, 0],
            });
        };
        let rgb = match (&self.fusion, rgb) {
            (Some(_), None) => {
                return Err(Error::Usage("fusion generator needs an RGB frame".into()))
            }
            (None, Some(_)) => {
                return Err(Error::Usage(
                    "thermal-only generator takes no RGB frame".into(),
                ))
            }
            (_, rgb) => rgb,
        };
        if let Some(rgb) = &rgb {
            let rs = rgb.shape();
            if rs.len() != 4 || rs[0] != ts[0] || rs[1] != 3 || rs[2] != 4 * h || rs[3] != 4 * w {
                return Err(Error::Shape {
                    op: "generator rgb input (expected B x 3 x 4H x 4W)",
                    lhs: rs,
                    rhs: ts,
                });
            }
        }

        match self.config.scheme {
            Scheme::LowresThenUpsample => self.lowres_path(s, thermal, rgb),
            Scheme::ResidualGlobal => {
                let up = self
                    .input_up
                    .as_ref()
                    .expect("validated residual config has an input upsampler")
                    .forward(s, thermal)?;
                let residual = self.lowres_path(s, thermal, rgb)?;
                up.add(&residual)
            }
            Scheme::UpsampleThenProcess => {
                let mut x = match &self.input_up {
                    Some(up) => self.head.forward(s, up.forward(s, thermal)?)?.elu(),
                    None => {
                        let mut x = self.head.forward(s, thermal)?.elu();
                        for t in &self.front {
                            x = t.forward(s, x)?.elu();
                        }
                        x
                    }
                };
                for block in &self.blocks {
                    x = block.forward(s, x)?;
                }
                self.tail.forward(s, x)
            }
        }
    }

    fn lowres_path<'t>(
        &self,
        s: &Session<'t, T>,
        thermal: Var<'t, T>,
        rgb: Option<Var<'t, T>>,
    ) -> Result<Var<'t, T>> {
        let mut x = self.head.forward(s, thermal)?.elu();
        if let (Some(f), Some(rgb)) = (&self.fusion, rgb) {
            let r = f.rgb1.forward(s, rgb)?.elu();
            let r = f.rgb2.forward(s, r)?.elu();
            x = f.merge.forward(s, concat(&[x, r], 1)?)?.elu();
        }
        for block in &self.blocks {
            x = block.forward(s, x)?;
        }
        for up in &self.ups {
            x = up.forward(s, x)?;
        }
        self.tail.forward(s, x)
    }

    /// Output of the RGB encoder alone (the tensor concatenated with thermal features).
    pub fn fusion_features<'t>(
        &self,
        s: &Session<'t, T>,
        rgb: Var<'t, T>,
    ) -> Result<Option<Var<'t, T>>> {
        let Some(f) = &self.fusion else {
            return Ok(None);
        };
        let r = f.rgb1.forward(s, rgb)?.elu();
        Ok(Some(f.rgb2.forward(s, r)?.elu()))
    }

    /// Inference without gradients.
    pub fn infer(&self, thermal: &Tensor<T>, rgb: Option<&Tensor<T>>) -> Result<Tensor<T>> {
        let tape = Tape::new();
        let s = Session::frozen(&tape, &self.params);
        let out = self.forward(
            &s,
            tape.constant(thermal.clone()),
            rgb.map(|r| tape.constant(r.clone())),
        )?;
        let value = (*out.value()).clone();
        Ok(value)
    }
}

impl<T: Element> ModelGraph<T> for Generator<T> {
    fn params(&self) -> &ParamStore<T> {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ParamStore<T> {
        &mut self.params
    }

    fn input_arity(&self) -> usize {
        self.config.input_arity()
    }
}
