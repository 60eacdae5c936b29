//! Inference and evaluation on files.

use std::path::{Path, PathBuf};

use crate::checkpoint::Checkpoint;
use crate::data::{load_rgb, load_thermal, save_thermal, DatasetManifest, SamplePair, Split};
use crate::error::{Error, Result};
use crate::metrics::{psnr, ssim, MetricReport};
use crate::models::Generator;
use crate::nn::{interp_upsample, InterpMethod};
use crate::tensor::{Element, Tensor};

/// Adds a leading batch axis to a `(C, H, W)` tensor.
fn batched<T: Element>(t: &Tensor<T>) -> Result<Tensor<T>> {
    let mut shape = vec![1];
    shape.extend_from_slice(t.shape());
    t.reshape(&shape)
}

fn unbatched<T: Element>(t: &Tensor<T>) -> Result<Tensor<T>> {
    t.reshape(&t.shape()[1..])
}

/// Super-resolves one `(1, h, w)` frame (plus `(3, 4h, 4w)` RGB for fusion
/// models) to `(1, 4h, 4w)`.
pub fn super_resolve<T: Element>(
    g: &Generator<T>,
    thermal: &Tensor<T>,
    rgb: Option<&Tensor<T>>,
) -> Result<Tensor<T>> {
    match (g.config.fusion, rgb) {
        (true, None) => {
            return Err(Error::Usage(
                "this model fuses RGB guidance: supply an RGB frame".into(),
            ))
        }
        (false, Some(_)) => {
            return Err(Error::Usage(
                "this model is thermal-only: do not supply RGB".into(),
            ))
        }
        _ => {}
    }
    let rgb = rgb.map(batched).transpose()?;
    unbatched(&g.infer(&batched(thermal)?, rgb.as_ref())?)
}

/// One inference job: an LR thermal frame and, for fusion models, its HR RGB frame.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InferInput {
    pub thermal: PathBuf,
    pub rgb: Option<PathBuf>,
}

/// Writes `<stem>_sr.pgm` (and its range sidecar) per input, in input order.
/// Outputs keep the physical range of their input frame.
pub fn infer_files(
    checkpoint: &Path,
    inputs: &[InferInput],
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    let g: Generator<f32> = Checkpoint::load(checkpoint)?.generator()?;
    let mut written = Vec::with_capacity(inputs.len());
    for input in inputs {
        let thermal = load_thermal::<f32>(&input.thermal)?;
        let rgb = input.rgb.as_deref().map(load_rgb::<f32>).transpose()?;
        let sr = super_resolve(&g, &thermal.tensor, rgb.as_ref())?;
        let stem = input
            .thermal
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| format!("frame{}", written.len()));
        let path = out_dir.join(format!("{stem}_sr.pgm"));
        save_thermal(&path, &sr, &thermal.range)?;
        written.push(path);
    }
    Ok(written)
}

/// Scores `predict(sample)` against each sample's HR frame (PSNR peak 1.0).
pub fn evaluate_samples<T: Element>(
    samples: &[SamplePair<T>],
    predict: impl Fn(&SamplePair<T>) -> Result<Tensor<T>>,
) -> Result<MetricReport> {
    if samples.is_empty() {
        return Err(Error::Config(
            "nothing to evaluate: the split is empty".into(),
        ));
    }
    let mut report = MetricReport::default();
    for s in samples {
        let sr = predict(s)?;
        report.push(
            s.id.clone(),
            psnr(&s.thermal_hr, &sr, 1.0)?,
            ssim(&s.thermal_hr, &sr, 1.0)?,
        );
    }
    Ok(report)
}

/// Bicubic x4 upsampling of the LR frame; the non-learned reference.
pub fn bicubic_baseline<T: Element>(s: &SamplePair<T>) -> Result<Tensor<T>> {
    unbatched(&interp_upsample(
        &batched(&s.thermal_lr)?,
        InterpMethod::Bicubic,
        4,
    )?)
}

pub fn evaluate_generator<T: Element>(
    g: &Generator<T>,
    samples: &[SamplePair<T>],
) -> Result<MetricReport> {
    evaluate_samples(samples, |s| {
        super_resolve(g, &s.thermal_lr, g.config.fusion.then_some(&s.rgb))
    })
}

/// Evaluates a checkpoint on one split of a manifest.
pub fn evaluate_checkpoint(
    checkpoint: &Path,
    manifest: &DatasetManifest,
    split: Split,
) -> Result<MetricReport> {
    let g: Generator<f32> = Checkpoint::load(checkpoint)?.generator()?;
    let samples = manifest
        .split(split)
        .map(|e| SamplePair::load(manifest, e))
        .collect::<Result<Vec<_>>>()?;
    evaluate_generator(&g, &samples)
}
