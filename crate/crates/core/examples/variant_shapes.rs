//! Builds every generator variant at full size and reports shapes and parameter counts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thermal_sr::models::{Generator, ModelGraph, Variant};
use thermal_sr::Tensor;

fn main() -> thermal_sr::Result<()> {
    let thermal = Tensor::<f32>::full(&[1, 1, 60, 80], 0.5);
    let rgb = Tensor::<f32>::full(&[1, 3, 240, 320], 0.5);
    for variant in Variant::ALL {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let g: Generator = Generator::build(variant.config(), &mut rng)?;
        let guide = g.config.fusion.then_some(&rgb);
        let out = g.infer(&thermal, guide)?;
        println!(
            "{:<22} {:>8} params -> {:?}",
            variant.name(),
            g.count_parameters(),
            out.shape()
        );
    }
    Ok(())
}
