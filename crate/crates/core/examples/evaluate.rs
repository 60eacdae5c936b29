//! PSNR/SSIM of bicubic upsampling against an untrained generator on synthetic test frames.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thermal_sr::data::{synth_dataset, Dataset, Split, SynthOptions};
use thermal_sr::models::{Generator, Variant};
use thermal_sr::runner::{bicubic_baseline, evaluate_generator, evaluate_samples};

fn main() -> thermal_sr::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");
    let opts = SynthOptions {
        n_test: 3,
        ..SynthOptions::sized(96, 128)
    };
    let manifest = synth_dataset(dir.path(), 6, 5, opts)?;
    let test: Dataset = Dataset::load(&manifest, Split::Test)?;

    let bicubic = evaluate_samples(&test.samples, bicubic_baseline)?;
    print!("bicubic\n{}", bicubic.to_text());

    let config = Variant::Tsrcnn.config().with_size(2, 16);
    let g: Generator = Generator::build(config, &mut ChaCha8Rng::seed_from_u64(0))?;
    let untrained = evaluate_generator(&g, &test.samples)?;
    print!("untrained TSRCNN\n{}", untrained.to_text());
    Ok(())
}
