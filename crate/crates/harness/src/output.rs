//! CSV and JSON writers. Singular or failed points are written as sentinel
//! strings, never as numbers.

use std::cmp::Ordering;
use std::path::{Path, PathBuf};

use risloc::Bound;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::ExperimentConfig;
use crate::error::{io_err, Result};

pub const SINGULAR: &str = "singular";
pub const FAILED: &str = "error";

/// Result of one evaluated point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Value(f64),
    Singular { rank: usize },
    Failed(String),
}

impl Outcome {
    pub fn from_bound(b: Bound<f64>) -> Self {
        match b {
            Bound::Value(v) => Self::Value(v),
            Bound::Singular { rank, .. } => Self::Singular { rank },
        }
    }

    pub fn from_result(r: crate::error::Result<Bound<f64>>) -> Self {
        match r {
            Ok(b) => Self::from_bound(b),
            Err(e) => Self::Failed(e.to_string()),
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Self::Value(v) => Some(*v),
            _ => None,
        }
    }

    pub fn is_singular(&self) -> bool {
        matches!(self, Self::Singular { .. })
    }

    pub fn cell(&self) -> String {
        match self {
            Self::Value(v) => num(*v),
            Self::Singular { .. } => SINGULAR.into(),
            Self::Failed(_) => FAILED.into(),
        }
    }

    /// Values ascending, then singular points (an unbounded error), then
    /// failures.
    pub fn total_cmp(&self, other: &Self) -> Ordering {
        fn rank(o: &Outcome) -> u8 {
            match o {
                Outcome::Value(_) => 0,
                Outcome::Singular { .. } => 1,
                Outcome::Failed(_) => 2,
            }
        }
        match (self, other) {
            (Self::Value(a), Self::Value(b)) => a.total_cmp(b),
            _ => rank(self).cmp(&rank(other)),
        }
    }
}

/// Lower median under [`Outcome::total_cmp`]; `None` for an empty set.
pub fn median<'a>(items: impl IntoIterator<Item = &'a Outcome>) -> Option<Outcome> {
    let mut v: Vec<&Outcome> = items.into_iter().collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    Some(v[(v.len() - 1) / 2].clone())
}

/// Mean of the finite values, with the count of values used.
pub fn mean_of_values<'a>(items: impl IntoIterator<Item = &'a Outcome>) -> (Option<f64>, usize) {
    let vals: Vec<f64> = items.into_iter().filter_map(Outcome::value).collect();
    if vals.is_empty() {
        (None, 0)
    } else {
        (Some(vals.iter().sum::<f64>() / vals.len() as f64), vals.len())
    }
}

/// Shortest round-trip decimal form; identical across runs and platforms.
pub fn num(v: f64) -> String {
    format!("{v:e}")
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Where an experiment writes its files.
#[derive(Debug, Clone)]
pub struct OutputSet {
    dir: PathBuf,
    stem: String,
    written: Vec<PathBuf>,
}

impl OutputSet {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let dir = cfg.outputs.dir.clone();
        std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        Ok(Self {
            dir,
            stem: cfg.file_stem(),
            written: Vec::new(),
        })
    }

    fn path(&self, suffix: &str, ext: &str) -> PathBuf {
        let name = if suffix.is_empty() {
            format!("{}.{ext}", self.stem)
        } else {
            format!("{}_{suffix}.{ext}", self.stem)
        };
        self.dir.join(name)
    }

    pub fn csv(&mut self, suffix: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        let path = self.path(suffix, "csv");
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush().map_err(io_err(&path))?;
        self.written.push(path);
        Ok(())
    }

    pub fn json(&mut self, suffix: &str, value: &Value) -> Result<()> {
        let path = self.path(suffix, "json");
        write_json(&path, value)?;
        self.written.push(path);
        Ok(())
    }

    /// Sidecar with the resolved configuration, the files written and a
    /// summary; always the last file of a run.
    pub fn finish(mut self, cfg: &ExperimentConfig, summary: Value, notes: &[&str]) -> Result<Vec<PathBuf>> {
        let files: Vec<String> = self
            .written
            .iter()
            .map(|p| p.file_name().unwrap_or_default().to_string_lossy().into_owned())
            .collect();
        let sidecar = serde_json::json!({
            "experiment": cfg.experiment.name(),
            "config": cfg,
            "files": files,
            "summary": summary,
            "notes": notes,
        });
        let path = self.path("", "json");
        write_json(&path, &sidecar)?;
        self.written.push(path);
        Ok(self.written)
    }
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singular_sorts_after_values() {
        let items = [
            Outcome::Singular { rank: 4 },
            Outcome::Value(3.0),
            Outcome::Value(1.0),
            Outcome::Failed("x".into()),
        ];
        assert_eq!(median(&items), Some(Outcome::Value(3.0)));
        assert_eq!(median(&items[..1]), Some(Outcome::Singular { rank: 4 }));
        assert_eq!(median(&[]), None);
        assert_eq!(mean_of_values(&items), (Some(2.0), 2));
    }

    #[test]
    fn cells() {
        assert_eq!(Outcome::Singular { rank: 2 }.cell(), SINGULAR);
        assert_eq!(Outcome::Value(0.25).cell(), "2.5e-1");
        assert_eq!(opt_num(None), "");
    }
}
