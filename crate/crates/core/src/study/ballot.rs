use std::fmt;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use super::{VoteMatrix, TRIPLE};
use crate::error::{Error, Result};

/// One rater decision. The triple is stored with the ballot so the log can be
/// replayed without the assignment set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Ballot {
    /// Milliseconds since the Unix epoch.
    pub timestamp: u64,
    pub rater: String,
    pub group: usize,
    pub image_id: String,
    pub assignment_id: String,
    pub chosen: usize,
    pub triple: [usize; TRIPLE],
}

impl fmt::Display for Ballot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c] = self.triple;
        write!(
            f,
            "{}\t{}\t{}\t{}\t{}\t{}\t{a},{b},{c}",
            self.timestamp, self.rater, self.group, self.image_id, self.assignment_id, self.chosen
        )
    }
}

impl FromStr for Ballot {
    type Err = Error;

    fn from_str(line: &str) -> Result<Self> {
        let bad = |what: &str| Error::Contract(format!("ballot line `{line}`: bad {what}"));
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 7 {
            return Err(bad("column count"));
        }
        let triple: Vec<usize> = cols[6]
            .split(',')
            .map(|v| v.parse().map_err(|_| bad("triple")))
            .collect::<Result<_>>()?;
        Ok(Ballot {
            timestamp: cols[0].parse().map_err(|_| bad("timestamp"))?,
            rater: cols[1].to_string(),
            group: cols[2].parse().map_err(|_| bad("group"))?,
            image_id: cols[3].to_string(),
            assignment_id: cols[4].to_string(),
            chosen: cols[5].parse().map_err(|_| bad("chosen model"))?,
            triple: triple.try_into().map_err(|_| bad("triple"))?,
        })
    }
}

pub fn read_ballot_log(path: &Path) -> Result<Vec<Ballot>> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(Error::io(path, e)),
    };
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.parse()
                .map_err(|e: Error| Error::format(path, e.to_string()))
        })
        .collect()
}

/// Rebuilds the tallies from scratch.
pub fn replay(roster_size: usize, ballots: &[Ballot]) -> Result<VoteMatrix> {
    let mut m = VoteMatrix::new(roster_size);
    for b in ballots {
        m.record(&b.triple, b.chosen)?;
    }
    Ok(m)
}

/// Append-only ballot log; each ballot is flushed before it is acknowledged.
pub struct BallotLog {
    file: File,
}

impl BallotLog {
    pub fn open(path: &Path) -> Result<Self> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        Ok(BallotLog { file })
    }

    pub fn append(&mut self, ballot: &Ballot) -> Result<()> {
        writeln!(self.file, "{ballot}")
            .and_then(|_| self.file.flush())
            .map_err(|e| Error::io("ballot log", e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_round_trip() {
        let b = Ballot {
            timestamp: 1_700_000_000_123,
            rater: "r1".into(),
            group: 2,
            image_id: "img07".into(),
            assignment_id: "a0064".into(),
            chosen: 5,
            triple: [4, 5, 6],
        };
        assert_eq!(
            b.to_string(),
            "1700000000123\tr1\t2\timg07\ta0064\t5\t4,5,6"
        );
        assert_eq!(b.to_string().parse::<Ballot>().unwrap(), b);
        assert!("1\tr\t1\ti\ta\t5".parse::<Ballot>().is_err());
    }

    #[test]
    fn log_appends_and_replays() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ballots.tsv");
        assert!(read_ballot_log(&path).unwrap().is_empty());
        let b = Ballot {
            timestamp: 1,
            rater: "r".into(),
            group: 1,
            image_id: "i".into(),
            assignment_id: "a".into(),
            chosen: 0,
            triple: [0, 1, 2],
        };
        BallotLog::open(&path).unwrap().append(&b).unwrap();
        BallotLog::open(&path)
            .unwrap()
            .append(&Ballot {
                chosen: 2,
                ..b.clone()
            })
            .unwrap();
        let back = read_ballot_log(&path).unwrap();
        assert_eq!(back.len(), 2);
        let m = replay(3, &back).unwrap();
        assert_eq!((m.raw(0, 1), m.raw(2, 0), m.ballots()), (1, 1, 2));
    }
}
