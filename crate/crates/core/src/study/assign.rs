use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Models shown side by side per image.
pub const TRIPLE: usize = 3;

/// One image shown to one rater group with three candidate models, in display order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub id: String,
    /// 1-based.
    pub group: usize,
    pub image_id: String,
    /// Roster indices in display order.
    pub models: [usize; TRIPLE],
}

/// Per image, a seeded partition of the roster into triples (triple `k` goes
/// to group `k + 1`), each in shuffled display order. Output is ordered by
/// group, then image.
pub fn generate_assignments(
    image_ids: &[String],
    roster_size: usize,
    seed: u64,
) -> Result<Vec<Assignment>> {
    if roster_size == 0 || !roster_size.is_multiple_of(TRIPLE) {
        return Err(Error::Config(format!(
            "a roster of {roster_size} models cannot be split into groups of {TRIPLE}"
        )));
    }
    let groups = roster_size / TRIPLE;
    let mut per_group: Vec<Vec<(String, [usize; TRIPLE])>> = vec![Vec::new(); groups];
    for (i, image) in image_ids.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let mut order: Vec<usize> = (0..roster_size).collect();
        order.shuffle(&mut rng);
        for (g, triple) in order.chunks_exact(TRIPLE).enumerate() {
            per_group[g].push((image.clone(), [triple[0], triple[1], triple[2]]));
        }
    }
    Ok(per_group
        .into_iter()
        .enumerate()
        .flat_map(|(g, items)| {
            items
                .into_iter()
                .map(move |(image_id, models)| (g + 1, image_id, models))
        })
        .enumerate()
        .map(|(n, (group, image_id, models))| Assignment {
            id: format!("a{n:04}"),
            group,
            image_id,
            models,
        })
        .collect())
}
