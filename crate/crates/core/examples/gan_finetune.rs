//! Content pre-training followed by a short adversarial phase on a toy model.

use thermal_sr::config::RunConfig;
use thermal_sr::data::{synth_dataset, Dataset, Split, SynthOptions};
use thermal_sr::train::Trainer;

fn main() -> thermal_sr::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");
    let manifest = synth_dataset(dir.path(), 4, 2, SynthOptions::sized(64, 80))?;
    let data: Dataset = Dataset::load(&manifest, Split::Trainval)?;
    let config = RunConfig::from_toml(
        r#"
        [model]
        residual_blocks = 2
        channels = 16
        discriminator_channels = 16
        [train]
        batch_size = 4
        [content]
        epochs = 300
        lr_start = 1e-3
        lr_end = 1e-4
        [gan]
        epochs = 100
        lr_start = 1e-4
        lr_end = 1e-5
        d_lr_start = 1e-2
        d_lr_end = 1e-2
        "#,
    )?;
    let mut trainer = Trainer::new(config)?;
    let mut log = std::io::sink();
    let content = trainer.fit(&data, &mut log)?;
    println!("content phase: {}", content.last().expect("steps"));

    trainer.enter_gan()?;
    let batch = data.batch(&[0, 1, 2, 3])?;
    let gan = trainer.fit(&data, &mut log)?;
    let d = trainer.evaluate_discriminator(&batch)?;
    println!("gan phase:     {}", gan.last().expect("steps"));
    println!(
        "discriminator loss {:.4}, accuracy {:.2}",
        d.loss, d.accuracy
    );
    Ok(())
}
