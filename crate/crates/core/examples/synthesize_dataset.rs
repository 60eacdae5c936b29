//! Writes a small synthetic visual-thermal dataset and inspects one sample.
//!
//! `cargo run --release --example synthesize_dataset -- /tmp/synth`

use thermal_sr::data::{synth_dataset, Dataset, Split, SynthOptions};

fn main() -> thermal_sr::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| std::env::temp_dir().join("thermal_sr_synth"));
    let opts = SynthOptions {
        n_test: 2,
        ..SynthOptions::sized(120, 160)
    };
    let manifest = synth_dataset(&dir, 8, 7, opts)?;
    println!(
        "wrote {} samples under {}",
        manifest.entries.len(),
        dir.display()
    );

    let train: Dataset = Dataset::load(&manifest, Split::Trainval)?;
    let s = &train.samples[0];
    println!(
        "{}: HR {:?}, LR {:?}, RGB {:?}, {:.2} K .. {:.2} K",
        s.id,
        s.thermal_hr.shape(),
        s.thermal_lr.shape(),
        s.rgb.shape(),
        s.range.min,
        s.range.max
    );
    Ok(())
}
