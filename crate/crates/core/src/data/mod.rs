//! Dataset records, on-disk formats, LR synthesis and batching.

mod batch;
mod manifest;
pub mod pnm;
mod pyramid;
mod synth;

pub use batch::{batch_indices, batch_iter, Batch, Dataset};
pub use manifest::{DatasetManifest, ManifestEntry, Split, BENCHMARK_TEST, BENCHMARK_TRAINVAL};
pub use pnm::ThermalRange;
pub use pyramid::{gaussian_taps, make_lr, PYRAMID_LEVELS, PYRAMID_SIGMA, PYRAMID_TAPS};
pub use synth::{synth_dataset, SynthOptions};

use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::{Element, Tensor};

/// Largest 16-bit code.
pub const CODE_MAX: f64 = 65535.0;

/// Per-image min-max normalization. A flat image maps to 0.5 everywhere and
/// reports `degenerate = true`.
#[derive(Clone, Debug, PartialEq)]
pub struct Normalized {
    pub values: Vec<f64>,
    pub range: ThermalRange,
    pub degenerate: bool,
}

pub fn normalize_thermal(physical: &[f64]) -> Result<Normalized> {
    if physical.is_empty() {
        return Err(Error::Contract("cannot normalize an empty image".into()));
    }
    if physical.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(
            "thermal image holds non-finite values".into(),
        ));
    }
    let min = physical.iter().copied().fold(f64::INFINITY, f64::min);
    let max = physical.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = ThermalRange { min, max };
    if range.is_degenerate() {
        return Ok(Normalized {
            values: vec![0.5; physical.len()],
            range,
            degenerate: true,
        });
    }
    let span = range.span();
    Ok(Normalized {
        values: physical.iter().map(|v| (v - min) / span).collect(),
        range,
        degenerate: false,
    })
}

/// Inverse of [`normalize_thermal`]; a degenerate range maps everything to `min`.
pub fn denormalize_thermal(normalized: &[f64], range: &ThermalRange) -> Vec<f64> {
    if range.is_degenerate() {
        return vec![range.min; normalized.len()];
    }
    normalized
        .iter()
        .map(|v| range.min + v * range.span())
        .collect()
}

/// A thermal frame in network units (`(1, H, W)`, values in `[0, 1]`).
#[derive(Clone, Debug)]
pub struct ThermalImage<T: Element = f32> {
    pub tensor: Tensor<T>,
    /// Physical values of the darkest and brightest pixel.
    pub range: ThermalRange,
    pub degenerate: bool,
}

impl<T: Element> ThermalImage<T> {
    pub fn physical(&self) -> Vec<f64> {
        let norm: Vec<f64> = self
            .tensor
            .data()
            .iter()
            .map(|v| v.to_f64_lossy())
            .collect();
        denormalize_thermal(&norm, &self.range)
    }
}

/// Reads a 16-bit graymap and its range sidecar.
pub fn load_thermal<T: Element>(path: &Path) -> Result<ThermalImage<T>> {
    let img = pnm::read_pgm16(path)?;
    let file_range = pnm::read_range(&pnm::sidecar_path(path))?;
    let lo = *img
        .pixels
        .iter()
        .min()
        .ok_or_else(|| Error::format(path, "empty image"))?;
    let hi = *img.pixels.iter().max().unwrap_or(&lo);
    let physical = |code: u16| file_range.min + code as f64 / CODE_MAX * file_range.span();
    let range = ThermalRange {
        min: physical(lo),
        max: physical(hi),
    };
    let degenerate = lo == hi || range.is_degenerate();
    let data = if degenerate {
        vec![T::of(0.5); img.pixels.len()]
    } else {
        let span = (hi - lo) as f64;
        img.pixels
            .iter()
            .map(|&c| T::of((c - lo) as f64 / span))
            .collect()
    };
    Ok(ThermalImage {
        tensor: Tensor::new(&[1, img.height, img.width], data)?,
        range,
        degenerate,
    })
}

/// Writes normalized values (any shape ending in `H, W`, one plane) as 16-bit
/// codes spanning `range`. Values are clamped into `[0, 1]`.
pub fn save_thermal<T: Element>(
    path: &Path,
    normalized: &Tensor<T>,
    range: &ThermalRange,
) -> Result<()> {
    let (h, w) = spatial(normalized)?;
    if normalized.numel() != h * w {
        return Err(Error::Contract(format!(
            "save_thermal expects one plane, got shape {:?}",
            normalized.shape()
        )));
    }
    let pixels = normalized
        .data()
        .iter()
        .map(|v| (v.to_f64_lossy().clamp(0.0, 1.0) * CODE_MAX).round() as u16)
        .collect();
    pnm::write_pgm16(
        path,
        &pnm::Graymap16 {
            width: w,
            height: h,
            pixels,
        },
    )?;
    pnm::write_range(&pnm::sidecar_path(path), range)
}

/// Reads an 8-bit pixmap as a `(3, H, W)` tensor in `[0, 1]`.
pub fn load_rgb<T: Element>(path: &Path) -> Result<Tensor<T>> {
    let img = pnm::read_ppm8(path)?;
    let plane = img.width * img.height;
    let mut data = vec![T::zero(); 3 * plane];
    for (i, px) in img.pixels.chunks_exact(3).enumerate() {
        for c in 0..3 {
            data[c * plane + i] = T::of(px[c] as f64 / 255.0);
        }
    }
    Tensor::new(&[3, img.height, img.width], data)
}

pub fn save_rgb<T: Element>(path: &Path, rgb: &Tensor<T>) -> Result<()> {
    let (h, w) = spatial(rgb)?;
    let plane = h * w;
    if rgb.numel() != 3 * plane {
        return Err(Error::Contract(format!(
            "save_rgb expects 3 planes, got shape {:?}",
            rgb.shape()
        )));
    }
    let d = rgb.data();
    let mut pixels = Vec::with_capacity(3 * plane);
    for i in 0..plane {
        for c in 0..3 {
            pixels.push((d[c * plane + i].to_f64_lossy().clamp(0.0, 1.0) * 255.0).round() as u8);
        }
    }
    pnm::write_ppm8(
        path,
        &pnm::Pixmap8 {
            width: w,
            height: h,
            pixels,
        },
    )
}

fn spatial<T: Element>(t: &Tensor<T>) -> Result<(usize, usize)> {
    match t.shape() {
        [.., h, w] => Ok((*h, *w)),
        s => Err(Error::Contract(format!(
            "expected spatial axes, got shape {s:?}"
        ))),
    }
}

/// One training/evaluation record.
#[derive(Clone, Debug)]
pub struct SamplePair<T: Element = f32> {
    pub id: String,
    /// `(1, H, W)`.
    pub thermal_hr: Tensor<T>,
    /// `(3, H, W)`.
    pub rgb: Tensor<T>,
    /// `(1, H/4, W/4)`.
    pub thermal_lr: Tensor<T>,
    pub range: ThermalRange,
    pub degenerate: bool,
}

impl<T: Element> SamplePair<T> {
    pub fn new(id: impl Into<String>, thermal: ThermalImage<T>, rgb: Tensor<T>) -> Result<Self> {
        let hr = thermal.tensor;
        if hr.ndim() != 3 || hr.shape()[0] != 1 {
            return Err(Error::Contract(format!(
                "thermal must be (1, H, W), got {:?}",
                hr.shape()
            )));
        }
        if rgb.ndim() != 3 || rgb.shape()[0] != 3 || rgb.shape()[1..] != hr.shape()[1..] {
            return Err(Error::shape(
                "sample pair rgb/thermal",
                rgb.shape(),
                hr.shape(),
            ));
        }
        let thermal_lr = make_lr(&hr)?;
        Ok(SamplePair {
            id: id.into(),
            thermal_hr: hr,
            rgb,
            thermal_lr,
            range: thermal.range,
            degenerate: thermal.degenerate,
        })
    }

    pub fn load(manifest: &DatasetManifest, entry: &ManifestEntry) -> Result<Self> {
        let thermal = load_thermal(&manifest.resolve(&entry.thermal))?;
        let rgb = load_rgb(&manifest.resolve(&entry.rgb))?;
        Self::new(entry.id.clone(), thermal, rgb)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_examples() {
        let n = normalize_thermal(&[290.0, 300.0, 310.0]).unwrap();
        assert_eq!(n.values, vec![0.0, 0.5, 1.0]);
        assert_eq!(
            n.range,
            ThermalRange {
                min: 290.0,
                max: 310.0
            }
        );
        let flat = normalize_thermal(&[301.5; 6]).unwrap();
        assert!(flat.degenerate);
        assert!(flat.values.iter().all(|&v| v == 0.5));
        assert_eq!(
            denormalize_thermal(&flat.values, &flat.range),
            vec![301.5; 6]
        );
    }

    #[test]
    fn thermal_file_with_known_range() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.pgm");
        let phys = [290.0, 300.0, 310.0, 295.0];
        let n = normalize_thermal(&phys).unwrap();
        let t = Tensor::<f64>::from_f64(&[1, 2, 2], &n.values).unwrap();
        save_thermal(&p, &t, &n.range).unwrap();
        let back = load_thermal::<f64>(&p).unwrap();
        assert_eq!(
            back.range,
            ThermalRange {
                min: 290.0,
                max: 310.0
            }
        );
        assert!((back.tensor.data()[1] - 0.5).abs() <= 0.5 / CODE_MAX);
        for (a, b) in back.physical().iter().zip(phys) {
            assert!((a - b).abs() / b < 1e-6);
        }
    }

    #[test]
    fn flat_thermal_file_is_degenerate() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("flat.pgm");
        let r = ThermalRange {
            min: 300.0,
            max: 300.0,
        };
        save_thermal(&p, &Tensor::<f32>::full(&[1, 4, 4], 0.5), &r).unwrap();
        let img = load_thermal::<f32>(&p).unwrap();
        assert!(img.degenerate);
        assert!(img.tensor.data().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn rgb_scaling_and_layout() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.ppm");
        pnm::write_ppm8(
            &p,
            &pnm::Pixmap8 {
                width: 2,
                height: 1,
                pixels: vec![255, 0, 51, 0, 255, 102],
            },
        )
        .unwrap();
        let t = load_rgb::<f32>(&p).unwrap();
        assert_eq!(t.shape(), &[3, 1, 2]);
        assert_eq!(t.data(), &[1.0, 0.0, 0.0, 1.0, 0.2, 0.4]);
        let q = dir.path().join("d.ppm");
        save_rgb(&q, &t).unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), std::fs::read(&q).unwrap());
    }

    #[test]
    fn sample_pair_dims() {
        let thermal = ThermalImage {
            tensor: Tensor::<f32>::zeros(&[1, 64, 80]),
            range: ThermalRange { min: 0.0, max: 1.0 },
            degenerate: false,
        };
        let s = SamplePair::new("a", thermal.clone(), Tensor::zeros(&[3, 64, 80])).unwrap();
        assert_eq!(s.thermal_lr.shape(), &[1, 16, 20]);
        assert!(SamplePair::new("b", thermal, Tensor::zeros(&[3, 60, 80])).is_err());
    }
}
