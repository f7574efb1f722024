//! One directory per round:
//!
//! ```text
//! round-000/
//!   round.json           index, label source, job id
//!   pseudo_labels.json   COCO
//!   metrics.json         only when evaluated against truth
//!   train_report.jsonl   one line per training step, rounds >= 1
//! ```
//!
//! A round is assembled in a hidden sibling directory and renamed into
//! place, so a crash never leaves a half-written round behind.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::schedule::{RoundRecord, StepLoss, TrainReport};
use crate::canonical;
use crate::error::{Error, Result};
use crate::labels::{dataset_from_coco_str, dataset_to_coco_string, LabelSource, PseudoLabelSet};
use crate::metrics::EvalReport;

pub const ROUND_FILE: &str = "round.json";
pub const PSEUDO_LABELS_FILE: &str = "pseudo_labels.json";
pub const METRICS_FILE: &str = "metrics.json";
pub const TRAIN_REPORT_FILE: &str = "train_report.jsonl";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RoundManifest {
    round_index: usize,
    source: LabelSource,
    images: usize,
    boxes: usize,
    job_id: Option<String>,
}

#[derive(Debug, Clone)]
pub struct RoundStore {
    root: PathBuf,
}

fn json_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Parse {
        record: path.display().to_string(),
        message: e.to_string(),
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    canonical::to_string(value).map_err(|e| Error::Validation(e.to_string()))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

impl RoundStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn round_dir(&self, round: usize) -> PathBuf {
        self.root.join(format!("round-{round:03}"))
    }

    /// Indices of the rounds on disk, ascending.
    pub fn rounds(&self) -> Result<Vec<usize>> {
        let entries = match fs::read_dir(&self.root) {
            Ok(e) => e,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(Error::io(&self.root, e)),
        };
        let mut out = Vec::new();
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(&self.root, e))?;
            let name = entry.file_name();
            if let Some(n) = name
                .to_str()
                .and_then(|n| n.strip_prefix("round-"))
                .and_then(|n| n.parse().ok())
            {
                if entry.path().join(ROUND_FILE).is_file() {
                    out.push(n);
                }
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    pub fn write(&self, record: &RoundRecord) -> Result<()> {
        fs::create_dir_all(&self.root).map_err(|e| Error::io(&self.root, e))?;
        let dir = self.round_dir(record.round_index);
        let tmp = self.root.join(format!(".round-{:03}.tmp", record.round_index));
        if tmp.exists() {
            fs::remove_dir_all(&tmp).map_err(|e| Error::io(&tmp, e))?;
        }
        fs::create_dir_all(&tmp).map_err(|e| Error::io(&tmp, e))?;

        let labels = &record.pseudo_labels;
        let manifest = RoundManifest {
            round_index: record.round_index,
            source: labels.source,
            images: labels.images().len(),
            boxes: labels.box_count(),
            job_id: record.train_report.as_ref().map(|r| r.job_id.clone()),
        };
        write(&tmp.join(ROUND_FILE), &to_json(&manifest)?)?;
        write(&tmp.join(PSEUDO_LABELS_FILE), &dataset_to_coco_string(&labels.dataset)?)?;
        if let Some(m) = &record.metrics_vs_truth {
            write(&tmp.join(METRICS_FILE), &to_json(m)?)?;
        }
        if let Some(report) = &record.train_report {
            let mut lines = String::new();
            for step in &report.steps {
                lines.push_str(&canonical::to_line(step).map_err(|e| Error::Validation(e.to_string()))?);
                lines.push('\n');
            }
            write(&tmp.join(TRAIN_REPORT_FILE), &lines)?;
        }

        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
        fs::rename(&tmp, &dir).map_err(|e| Error::io(&dir, e))
    }

    pub fn load(&self, round: usize) -> Result<RoundRecord> {
        let dir = self.round_dir(round);
        let path = dir.join(ROUND_FILE);
        let manifest: RoundManifest = serde_json::from_str(&read(&path)?).map_err(|e| json_err(&path, e))?;
        if manifest.round_index != round {
            return Err(json_err(&path, format!("claims round {}", manifest.round_index)));
        }

        let path = dir.join(PSEUDO_LABELS_FILE);
        let dataset = dataset_from_coco_str(&read(&path)?, &path.display().to_string())?;
        let pseudo_labels = PseudoLabelSet {
            dataset,
            round_index: round,
            source: manifest.source,
        };
        pseudo_labels.validate(usize::MAX)?;

        let path = dir.join(METRICS_FILE);
        let metrics_vs_truth = if path.is_file() {
            Some(serde_json::from_str::<EvalReport>(&read(&path)?).map_err(|e| json_err(&path, e))?)
        } else {
            None
        };

        let path = dir.join(TRAIN_REPORT_FILE);
        let train_report = match manifest.job_id {
            Some(job_id) => {
                let steps = read(&path)?
                    .lines()
                    .filter(|l| !l.trim().is_empty())
                    .map(|l| serde_json::from_str::<StepLoss>(l).map_err(|e| json_err(&path, e)))
                    .collect::<Result<Vec<_>>>()?;
                Some(TrainReport { job_id, steps })
            }
            None => None,
        };
        Ok(RoundRecord {
            round_index: round,
            pseudo_labels,
            metrics_vs_truth,
            train_report,
        })
    }

    /// All rounds on disk; they must run contiguously from 0.
    pub fn load_all(&self) -> Result<Vec<RoundRecord>> {
        let rounds = self.rounds()?;
        for (expected, &r) in rounds.iter().enumerate() {
            if r != expected {
                return Err(Error::Validation(format!(
                    "{}: round {expected} is missing",
                    self.root.display()
                )));
            }
        }
        rounds.into_iter().map(|r| self.load(r)).collect()
    }
}
