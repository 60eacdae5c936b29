//! Simulated raters vote through a study; prints the normalized preference matrix.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thermal_sr::study::{default_roster, generate_assignments, Study};

fn main() -> thermal_sr::Result<()> {
    let images: Vec<String> = (0..58).map(|i| format!("img{i:02}")).collect();
    let roster = default_roster();
    let mut study = Study::new(
        roster.clone(),
        generate_assignments(&images, roster.len(), 11)?,
    )?;

    // Raters lean towards lower roster indices.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for r in 0..30 {
        let rater = format!("rater{r}");
        let group = r % study.groups() + 1;
        while let Some(a) = study.next_for(&rater, group).cloned() {
            let weights: Vec<f64> = a.models.iter().map(|&m| 1.0 / (1.0 + m as f64)).collect();
            let mut pick = rng.random::<f64>() * weights.iter().sum::<f64>();
            let slot = weights.iter().position(|w| {
                pick -= w;
                pick <= 0.0
            });
            study.vote(&rater, group, &a.id, slot.unwrap_or(2))?;
        }
    }

    let normalized = study.matrix().normalized();
    println!("{} ballots", study.ballots().len());
    for (name, row) in roster.iter().zip(&normalized) {
        let cells: Vec<String> = row
            .iter()
            .map(|r| format!("{:.2}", *r.numer() as f64 / *r.denom() as f64))
            .collect();
        println!("{name:>20} {}", cells.join(" "));
    }
    let flow = study.flow();
    for (name, share) in roster.iter().zip(&flow.favorable_share) {
        println!("{name:>20} {:.3}", share);
    }
    Ok(())
}
