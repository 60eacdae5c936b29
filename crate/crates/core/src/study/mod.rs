//! Pairwise human-preference study: raters see a reference HR frame and three
//! anonymized candidates and pick the closest one.

mod assign;
mod ballot;
mod matrix;
pub mod server;

pub use assign::{generate_assignments, Assignment, TRIPLE};
pub use ballot::{read_ballot_log, replay, Ballot, BallotLog};
pub use matrix::{export_flow, FlowExport, PairFlow, VoteMatrix};

use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::error::{Error, Result};

/// The nine compared models, in the order used by exports.
pub const DEFAULT_ROSTER: [&str; 9] = [
    "TSRCNN",
    "VTSRCNN",
    "InpDconv-TSRCNNres",
    "AllDconv-TSRCNNres",
    "TSRGAN",
    "VTSRGAN",
    "VDSR",
    "VDSRex",
    "LAPSRN",
];

pub fn default_roster() -> Vec<String> {
    DEFAULT_ROSTER.iter().map(|s| s.to_string()).collect()
}

fn now_millis() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// Assignments, accepted ballots and the tallies they imply. When a log is
/// attached, every accepted ballot is appended before the tallies change.
pub struct Study {
    roster: Vec<String>,
    assignments: Vec<Assignment>,
    by_id: HashMap<String, usize>,
    ballots: Vec<Ballot>,
    voted: HashSet<(String, String)>,
    matrix: VoteMatrix,
    log: Option<BallotLog>,
}

impl Study {
    pub fn new(roster: Vec<String>, assignments: Vec<Assignment>) -> Result<Self> {
        let n = roster.len();
        if let Some(a) = assignments
            .iter()
            .find(|a| a.models.iter().any(|&m| m >= n))
        {
            return Err(Error::Config(format!(
                "assignment {} names a model outside the roster",
                a.id
            )));
        }
        let by_id = assignments
            .iter()
            .enumerate()
            .map(|(i, a)| (a.id.clone(), i))
            .collect();
        Ok(Study {
            roster,
            assignments,
            by_id,
            ballots: Vec::new(),
            voted: HashSet::new(),
            matrix: VoteMatrix::new(n),
            log: None,
        })
    }

    /// Replays an existing log (if any), then appends new ballots to it.
    pub fn with_log(mut self, path: &Path) -> Result<Self> {
        for b in read_ballot_log(path)? {
            self.accept(b)?;
        }
        self.log = Some(BallotLog::open(path)?);
        Ok(self)
    }

    pub fn roster(&self) -> &[String] {
        &self.roster
    }

    pub fn assignments(&self) -> &[Assignment] {
        &self.assignments
    }

    pub fn assignment(&self, id: &str) -> Option<&Assignment> {
        self.by_id.get(id).map(|&i| &self.assignments[i])
    }

    pub fn ballots(&self) -> &[Ballot] {
        &self.ballots
    }

    pub fn matrix(&self) -> &VoteMatrix {
        &self.matrix
    }

    pub fn groups(&self) -> usize {
        self.roster.len() / TRIPLE
    }

    pub fn has_voted(&self, rater: &str, assignment_id: &str) -> bool {
        self.voted
            .contains(&(rater.to_string(), assignment_id.to_string()))
    }

    /// First assignment of `group` the rater has not answered.
    pub fn next_for(&self, rater: &str, group: usize) -> Option<&Assignment> {
        self.assignments
            .iter()
            .find(|a| a.group == group && !self.has_voted(rater, &a.id))
    }

    pub fn remaining_for(&self, rater: &str, group: usize) -> usize {
        self.assignments
            .iter()
            .filter(|a| a.group == group && !self.has_voted(rater, &a.id))
            .count()
    }

    fn accept(&mut self, ballot: Ballot) -> Result<()> {
        let key = (ballot.rater.clone(), ballot.assignment_id.clone());
        if self.voted.contains(&key) {
            return Err(Error::Conflict(format!(
                "rater {} already voted on {}",
                ballot.rater, ballot.assignment_id
            )));
        }
        self.matrix.record(&ballot.triple, ballot.chosen)?;
        self.voted.insert(key);
        self.ballots.push(ballot);
        Ok(())
    }

    /// Validates and records one vote for the model in display position `slot`.
    pub fn vote(
        &mut self,
        rater: &str,
        group: usize,
        assignment_id: &str,
        slot: usize,
    ) -> Result<&Ballot> {
        let a = self
            .assignment(assignment_id)
            .ok_or_else(|| Error::NotFound(format!("assignment `{assignment_id}`")))?;
        if a.group != group {
            return Err(Error::Usage(format!(
                "assignment {assignment_id} belongs to group {}, not {group}",
                a.group
            )));
        }
        let chosen = *a
            .models
            .get(slot)
            .ok_or_else(|| Error::Usage(format!("slot {slot} is not one of 0..{TRIPLE}")))?;
        self.vote_model(rater, assignment_id, chosen, now_millis())
    }

    /// Records a vote naming the chosen roster index directly.
    pub fn vote_model(
        &mut self,
        rater: &str,
        assignment_id: &str,
        chosen: usize,
        timestamp: u64,
    ) -> Result<&Ballot> {
        let a = self
            .assignment(assignment_id)
            .ok_or_else(|| Error::NotFound(format!("assignment `{assignment_id}`")))?;
        if !a.models.contains(&chosen) {
            return Err(Error::Usage(format!(
                "model {chosen} was not shown in {assignment_id}"
            )));
        }
        if rater.is_empty() || rater.contains(char::is_whitespace) {
            return Err(Error::Usage(format!("invalid rater id `{rater}`")));
        }
        let ballot = Ballot {
            timestamp,
            rater: rater.to_string(),
            group: a.group,
            image_id: a.image_id.clone(),
            assignment_id: a.id.clone(),
            chosen,
            triple: a.models,
        };
        if self.has_voted(rater, assignment_id) {
            return Err(Error::Conflict(format!(
                "rater {rater} already voted on {assignment_id}"
            )));
        }
        if let Some(log) = &mut self.log {
            log.append(&ballot)?;
        }
        self.accept(ballot)?;
        Ok(self.ballots.last().expect("just pushed"))
    }

    pub fn flow(&self) -> FlowExport {
        export_flow(&self.matrix, &self.roster).expect("roster matches matrix")
    }
}
