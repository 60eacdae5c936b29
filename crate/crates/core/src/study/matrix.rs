use num_rational::Ratio;
use num_traits::Zero;
use serde::Serialize;

use super::TRIPLE;
use crate::error::{Error, Result};

/// Pairwise tallies over a roster.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VoteMatrix {
    n: usize,
    /// `raw[i][j]`: ballots preferring `i` over `j`.
    raw: Vec<Vec<u64>>,
    /// `presented[i][j]`: ballots whose triple held both `i` and `j`.
    presented: Vec<Vec<u64>>,
    ballots: u64,
    first_choice: Vec<u64>,
}

impl VoteMatrix {
    pub fn new(n: usize) -> Self {
        VoteMatrix {
            n,
            raw: vec![vec![0; n]; n],
            presented: vec![vec![0; n]; n],
            ballots: 0,
            first_choice: vec![0; n],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn raw(&self, i: usize, j: usize) -> u64 {
        self.raw[i][j]
    }

    pub fn presented(&self, i: usize, j: usize) -> u64 {
        self.presented[i][j]
    }

    pub fn ballots(&self) -> u64 {
        self.ballots
    }

    /// Ballots naming `i` as the best of its triple.
    pub fn first_choice(&self, i: usize) -> u64 {
        self.first_choice[i]
    }

    /// One ballot: `chosen` wins against both other members of `triple`.
    pub fn record(&mut self, triple: &[usize; TRIPLE], chosen: usize) -> Result<()> {
        if triple.iter().any(|&m| m >= self.n) {
            return Err(Error::Contract(format!(
                "triple {triple:?} exceeds a roster of {}",
                self.n
            )));
        }
        if triple[0] == triple[1] || triple[1] == triple[2] || triple[0] == triple[2] {
            return Err(Error::Contract(format!(
                "triple {triple:?} repeats a model"
            )));
        }
        if !triple.contains(&chosen) {
            return Err(Error::Contract(format!(
                "model {chosen} is not in triple {triple:?}"
            )));
        }
        for &other in triple.iter().filter(|&&m| m != chosen) {
            self.raw[chosen][other] += 1;
        }
        for a in 0..TRIPLE {
            for b in a + 1..TRIPLE {
                self.presented[triple[a]][triple[b]] += 1;
                self.presented[triple[b]][triple[a]] += 1;
            }
        }
        self.first_choice[chosen] += 1;
        self.ballots += 1;
        Ok(())
    }

    /// Net margin in the winning direction over co-presentations:
    /// `max(raw[i][j] - raw[j][i], 0) / presented[i][j]`, zero for pairs never shown.
    pub fn normalized(&self) -> Vec<Vec<Ratio<u64>>> {
        (0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|j| {
                        let shown = self.presented[i][j];
                        let margin = self.raw[i][j].saturating_sub(self.raw[j][i]);
                        if shown == 0 {
                            Ratio::zero()
                        } else {
                            Ratio::new(margin, shown)
                        }
                    })
                    .collect()
            })
            .collect()
    }

    pub fn in_favor(&self, i: usize) -> u64 {
        self.raw[i].iter().sum()
    }

    pub fn against(&self, i: usize) -> u64 {
        (0..self.n).map(|j| self.raw[j][i]).sum()
    }

    pub fn total_awards(&self) -> u64 {
        self.raw.iter().flatten().sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairFlow {
    pub winner: usize,
    pub loser: usize,
    pub votes: u64,
    pub presented: u64,
    pub normalized: f64,
}

/// Vote-flow document: per-model totals for and against, plus pair weights.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowExport {
    pub models: Vec<String>,
    pub ballots: u64,
    pub in_favor: Vec<u64>,
    pub against: Vec<u64>,
    /// `in_favor[i] / sum(in_favor)`.
    pub favorable_share: Vec<f64>,
    pub first_choice: Vec<u64>,
    /// `first_choice[i] / ballots`.
    pub first_choice_share: Vec<f64>,
    /// Directed pairs with at least one vote.
    pub pairs: Vec<PairFlow>,
}

#[allow(clippy::needless_range_loop)]
pub fn export_flow(matrix: &VoteMatrix, models: &[String]) -> Result<FlowExport> {
    let n = matrix.size();
    if models.len() != n {
        return Err(Error::Config(format!(
            "{} model names for a roster of {n}",
            models.len()
        )));
    }
    let in_favor: Vec<u64> = (0..n).map(|i| matrix.in_favor(i)).collect();
    let total = matrix.total_awards();
    let share = |v: u64, of: u64| if of == 0 { 0.0 } else { v as f64 / of as f64 };
    let normalized = matrix.normalized();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if matrix.raw(i, j) > 0 {
                let r = normalized[i][j];
                pairs.push(PairFlow {
                    winner: i,
                    loser: j,
                    votes: matrix.raw(i, j),
                    presented: matrix.presented(i, j),
                    normalized: *r.numer() as f64 / *r.denom() as f64,
                });
            }
        }
    }
    Ok(FlowExport {
        models: models.to_vec(),
        ballots: matrix.ballots(),
        favorable_share: in_favor.iter().map(|&v| share(v, total)).collect(),
        in_favor,
        against: (0..n).map(|i| matrix.against(i)).collect(),
        first_choice: (0..n).map(|i| matrix.first_choice(i)).collect(),
        first_choice_share: (0..n)
            .map(|i| share(matrix.first_choice(i), matrix.ballots()))
            .collect(),
        pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example() {
        let mut m = VoteMatrix::new(9);
        m.record(&[4, 5, 6], 5).unwrap();
        assert_eq!(
            (m.raw(5, 4), m.raw(5, 6), m.raw(4, 6), m.raw(4, 5)),
            (1, 1, 0, 0)
        );
        assert_eq!(m.presented(4, 6), 1);
        assert_eq!(m.total_awards(), 2);
        assert!(m.record(&[4, 5, 6], 7).is_err());
    }

    #[test]
    fn margins_and_ties() {
        let mut m = VoteMatrix::new(9);
        for chosen in [5, 5, 5, 4] {
            m.record(&[4, 5, 0], chosen).unwrap();
        }
        let n = m.normalized();
        assert_eq!(n[5][4], Ratio::new(1, 2));
        assert_eq!(n[4][5], Ratio::zero());
        let mut t = VoteMatrix::new(3);
        for chosen in [1, 1, 2, 2] {
            t.record(&[0, 1, 2], chosen).unwrap();
        }
        assert_eq!(t.normalized()[1][2], Ratio::zero());
        assert_eq!(t.normalized()[2][1], Ratio::zero());
        for i in 0..3 {
            for j in 0..3 {
                assert!(t.normalized()[i][j].is_zero() || t.normalized()[j][i].is_zero());
            }
        }
    }

    #[test]
    fn flow_shares() {
        let names: Vec<String> = (0..9).map(|i| format!("m{i}")).collect();
        let empty = export_flow(&VoteMatrix::new(9), &names).unwrap();
        assert!(empty.favorable_share.iter().all(|&s| s == 0.0));
        let mut m = VoteMatrix::new(9);
        m.record(&[0, 1, 2], 1).unwrap();
        m.record(&[3, 1, 8], 1).unwrap();
        m.record(&[3, 4, 5], 4).unwrap();
        let f = export_flow(&m, &names).unwrap();
        assert!((f.favorable_share.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((f.first_choice_share.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let best = (0..9)
            .max_by(|&a, &b| f.favorable_share[a].total_cmp(&f.favorable_share[b]))
            .unwrap();
        assert_eq!(best, 1);
        assert_eq!(f.pairs.len(), 6);
    }
}
