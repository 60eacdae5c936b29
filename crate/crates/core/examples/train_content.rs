//! Content-phase training of a toy TSRCNN on synthetic frames, then a checkpoint round trip.
//!
//! `cargo run --release --example train_content -- [tsrcnn|vtsrcnn]`

use thermal_sr::checkpoint::Checkpoint;
use thermal_sr::config::RunConfig;
use thermal_sr::data::{synth_dataset, Dataset, Split, SynthOptions};
use thermal_sr::train::Trainer;

fn main() -> thermal_sr::Result<()> {
    let variant = std::env::args().nth(1).unwrap_or_else(|| "tsrcnn".into());
    let dir = tempfile::tempdir().expect("temp dir");
    let manifest = synth_dataset(dir.path(), 4, 1, SynthOptions::sized(64, 80))?;
    let data: Dataset = Dataset::load(&manifest, Split::Trainval)?;

    let config = RunConfig::from_toml(&format!(
        r#"
        [model]
        variant = "{variant}"
        residual_blocks = 2
        channels = 16
        [train]
        batch_size = 4
        [content]
        epochs = 2000
        max_steps = 2000
        lr_start = 1e-3
        lr_end = 1e-4
        "#
    ))?;
    let mut trainer = Trainer::new(config)?;
    let mut log = std::io::sink();
    let history = trainer.fit_until(&data, &mut log, |s| s.l_mse < 1e-3)?;
    let last = history.last().expect("at least one step");
    println!(
        "{} steps, final content loss {:.3e}",
        history.len(),
        last.l_mse
    );

    let path = dir.path().join("content.ckpt");
    Checkpoint::from_trainer(&trainer).save(&path)?;
    let restored = Checkpoint::<f32>::load(&path)?.generator()?;
    let sample = &data.samples[0];
    let rgb = restored
        .config
        .fusion
        .then(|| sample.rgb.reshape(&[1, 3, 64, 80]).unwrap());
    let sr = restored.infer(&sample.thermal_lr.reshape(&[1, 1, 16, 20])?, rgb.as_ref())?;
    println!("restored generator output {:?}", sr.shape());
    Ok(())
}
