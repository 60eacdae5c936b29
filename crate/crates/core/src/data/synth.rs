//! Synthetic visual-thermal scenes: warm blobs on a cool background, with a
//! colour rendering of the same geometry plus texture.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::pnm::{self, Graymap16, Pixmap8};
use super::{normalize_thermal, DatasetManifest, ManifestEntry, Split, CODE_MAX};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynthOptions {
    pub height: usize,
    pub width: usize,
    /// The last `n_test` samples go to the test split.
    pub n_test: usize,
    /// Standard deviation of per-pixel thermal noise in kelvin.
    pub thermal_noise: f64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            height: 240,
            width: 320,
            n_test: 0,
            thermal_noise: 0.08,
        }
    }
}

impl SynthOptions {
    pub fn sized(height: usize, width: usize) -> Self {
        SynthOptions {
            height,
            width,
            ..Self::default()
        }
    }
}

/// Width in pixels of the logistic rim shared by a blob's thermal and visual footprint.
const EDGE_WIDTH: f64 = 1.5;

struct Blob {
    cy: f64,
    cx: f64,
    radius: f64,
    heat: f64,
    colour: [f64; 3],
}

struct Scene {
    thermal: Vec<f64>,
    rgb: Vec<u8>,
}

fn render(rng: &mut ChaCha8Rng, h: usize, w: usize, noise: f64) -> Scene {
    let short = h.min(w) as f64;
    let blobs: Vec<Blob> = (0..rng.random_range(3..=6))
        .map(|_| Blob {
            cy: rng.random_range(0.1..0.9) * h as f64,
            cx: rng.random_range(0.1..0.9) * w as f64,
            radius: rng.random_range(0.06..0.18) * short,
            heat: rng.random_range(4.0..15.0),
            colour: [rng.random(), rng.random(), rng.random()],
        })
        .collect();
    let ambient = rng.random_range(285.0..295.0);
    let tilt = rng.random_range(-2.0..2.0);
    let sky = [
        rng.random_range(0.1..0.4),
        rng.random_range(0.1..0.4),
        rng.random_range(0.2..0.5),
    ];
    let (fy, fx) = (rng.random_range(0.01..0.06), rng.random_range(0.01..0.06));
    let sensor = Normal::new(0.0, noise.max(0.0)).expect("finite noise");
    let grain = Normal::new(0.0, 2.0 / 255.0).expect("finite noise");

    let mut thermal = Vec::with_capacity(h * w);
    let mut rgb = Vec::with_capacity(3 * h * w);
    for y in 0..h {
        for x in 0..w {
            let (yf, xf) = (y as f64, x as f64);
            let mut t = ambient + tilt * yf / h as f64;
            let texture = 0.05 * (fy * yf + fx * xf).sin();
            let mut c = sky.map(|v| v + texture);
            for b in &blobs {
                let d = ((yf - b.cy).powi(2) + (xf - b.cx).powi(2)).sqrt();
                let inside = 1.0 / (1.0 + ((d - b.radius) / EDGE_WIDTH).exp());
                let core = 1.0 - 0.3 * (d / b.radius).min(1.0);
                t += b.heat * inside * core;
                let mask = 1.0 / (1.0 + ((d - b.radius) / (0.75 * EDGE_WIDTH)).exp());
                for (ck, bk) in c.iter_mut().zip(b.colour) {
                    *ck = *ck * (1.0 - mask) + bk * mask;
                }
            }
            thermal.push(t + sensor.sample(rng));
            for v in c {
                rgb.push(((v + grain.sample(rng)).clamp(0.0, 1.0) * 255.0).round() as u8);
            }
        }
    }
    Scene { thermal, rgb }
}

/// Writes `n` samples under `dir` (`thermal/*.pgm` + `.range`, `rgb/*.ppm`,
/// `manifest.tsv`) and returns the manifest. Output is a pure function of
/// `(n, seed, opts)`.
pub fn synth_dataset(
    dir: &Path,
    n: usize,
    seed: u64,
    opts: SynthOptions,
) -> Result<DatasetManifest> {
    if n == 0 {
        return Err(Error::Config("synth_dataset needs n >= 1".into()));
    }
    if opts.n_test > n {
        return Err(Error::Config(format!(
            "n_test {} exceeds n {n}",
            opts.n_test
        )));
    }
    if !opts.height.is_multiple_of(4)
        || !opts.width.is_multiple_of(4)
        || opts.height < 16
        || opts.width < 16
    {
        return Err(Error::Config(format!(
            "synthetic frames must be at least 16x16 and divisible by 4, got {}x{}",
            opts.height, opts.width
        )));
    }
    let mut entries = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let scene = render(&mut rng, opts.height, opts.width, opts.thermal_noise);
        let norm = normalize_thermal(&scene.thermal)?;
        let id = format!("synth_{i:04}");
        let thermal = PathBuf::from(format!("thermal/{id}.pgm"));
        let rgb = PathBuf::from(format!("rgb/{id}.ppm"));
        let pixels = norm
            .values
            .iter()
            .map(|v| (v * CODE_MAX).round() as u16)
            .collect();
        pnm::write_pgm16(
            &dir.join(&thermal),
            &Graymap16 {
                width: opts.width,
                height: opts.height,
                pixels,
            },
        )?;
        pnm::write_range(&pnm::sidecar_path(&dir.join(&thermal)), &norm.range)?;
        pnm::write_ppm8(
            &dir.join(&rgb),
            &Pixmap8 {
                width: opts.width,
                height: opts.height,
                pixels: scene.rgb,
            },
        )?;
        let split = if i >= n - opts.n_test {
            Split::Test
        } else {
            Split::Trainval
        };
        entries.push(ManifestEntry {
            id,
            thermal,
            rgb,
            split,
        });
    }
    let manifest = DatasetManifest::new(dir, entries)?;
    manifest.save(&dir.join("manifest.tsv"))?;
    Ok(manifest)
}
