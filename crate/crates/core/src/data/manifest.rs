use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

/// Split sizes of the full visual-thermal benchmark.
pub const BENCHMARK_TRAINVAL: usize = 512;
pub const BENCHMARK_TEST: usize = 58;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Split {
    Trainval,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Trainval => "trainval",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trainval" => Ok(Split::Trainval),
            "test" => Ok(Split::Test),
            other => Err(Error::Config(format!(
                "unknown split `{other}` (expected trainval or test)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestEntry {
    pub id: String,
    pub thermal: PathBuf,
    pub rgb: PathBuf,
    pub split: Split,
}

/// Tab-separated `id  thermal_path  rgb_path  split`; relative paths resolve
/// against the manifest's directory. Blank lines and `#` comments are ignored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetManifest {
    pub root: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn new(root: impl Into<PathBuf>, entries: Vec<ManifestEntry>) -> Result<Self> {
        let m = DatasetManifest {
            root: root.into(),
            entries,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut entries = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 4 {
                return Err(Error::format(
                    path,
                    format!(
                        "line {}: expected 4 tab-separated columns, found {}",
                        n + 1,
                        cols.len()
                    ),
                ));
            }
            let split = cols[3]
                .parse()
                .map_err(|e: Error| Error::format(path, format!("line {}: {e}", n + 1)))?;
            entries.push(ManifestEntry {
                id: cols[0].to_string(),
                thermal: PathBuf::from(cols[1]),
                rgb: PathBuf::from(cols[2]),
                split,
            });
        }
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::new(root, entries).map_err(|e| Error::format(path, e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                e.id,
                e.thermal.display(),
                e.rgb.display(),
                e.split
            ));
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            if e.id.is_empty() || e.id.contains(char::is_whitespace) {
                return Err(Error::Config(format!("invalid sample id `{}`", e.id)));
            }
            if !seen.insert(e.id.as_str()) {
                return Err(Error::Config(format!("duplicate sample id `{}`", e.id)));
            }
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    pub fn count(&self, split: Split) -> usize {
        self.split(split).count()
    }

    /// Checks the split sizes of the full benchmark layout.
    pub fn check_benchmark_layout(&self) -> Result<()> {
        let (tv, te) = (self.count(Split::Trainval), self.count(Split::Test));
        if (tv, te) != (BENCHMARK_TRAINVAL, BENCHMARK_TEST) {
            return Err(Error::Config(format!(
                "benchmark layout needs {BENCHMARK_TRAINVAL} trainval and {BENCHMARK_TEST} test samples, found {tv} and {te}"
            )));
        }
        Ok(())
    }
}
