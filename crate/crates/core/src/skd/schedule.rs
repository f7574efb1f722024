use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::loss::{composite_loss, kd_loss_with, KdReduction};
use super::store::RoundStore;
use crate::backends::{DetectorTrainBackend, KdSignal, TrainOutcome, TrainRequest, TrainingImage};
use crate::canonical;
use crate::error::{Error, Result};
use crate::labels::{
    canonical_dataset, filter_and_cap, AnnotatedImage, Dataset, LabelSource, PseudoLabelSet, DEFAULT_CAP,
    DEFAULT_SCORE_THRESHOLD,
};
use crate::metrics::{EvalReport, DEFAULT_MAX_DETS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    #[default]
    FixedRounds,
    /// Stop after the first round whose mAP against truth does not improve
    /// on the best so far.
    EarlyStopOnVal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SkdConfig {
    pub alpha: f64,
    pub rounds: usize,
    pub score_threshold: f64,
    pub cap: usize,
    pub stop_rule: StopRule,
    pub kd: KdReduction,
    pub max_dets: usize,
}

impl Default for SkdConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            rounds: 4,
            score_threshold: DEFAULT_SCORE_THRESHOLD,
            cap: DEFAULT_CAP,
            stop_rule: StopRule::FixedRounds,
            kd: KdReduction::Mean,
            max_dets: DEFAULT_MAX_DETS,
        }
    }
}

impl SkdConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Validation(m));
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return bad(format!("alpha must be finite and >= 0, got {}", self.alpha));
        }
        if self.rounds == 0 {
            return bad("rounds must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.score_threshold) {
            return bad(format!("score threshold {} outside [0, 1]", self.score_threshold));
        }
        if self.cap == 0 || self.max_dets == 0 {
            return bad("cap and max_dets must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepLoss {
    pub step: usize,
    pub l_det: f64,
    pub l_kd: f64,
    pub composite: f64,
}

/// Loss trajectory of the student that produced a round's labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub job_id: String,
    pub steps: Vec<StepLoss>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round_index: usize,
    pub pseudo_labels: PseudoLabelSet,
    pub metrics_vs_truth: Option<EvalReport>,
    /// Absent for round 0, whose labels come from the teacher.
    pub train_report: Option<TrainReport>,
}

impl RoundRecord {
    pub fn map(&self) -> Option<f64> {
        self.metrics_vs_truth.as_ref().map(|m| m.detection.map)
    }
}

/// Scalar distillation loss of one step: the mean of the per-image L1
/// distances, or the value the backend reported.
pub fn reduce_kd(signal: &KdSignal, reduction: KdReduction) -> Result<f64> {
    match signal {
        KdSignal::Features(pairs) => {
            if pairs.is_empty() {
                return Err(Error::Validation("training step carried no feature pairs".into()));
            }
            Ok(pairs.iter().map(|p| kd_loss_with(p, reduction)).sum::<f64>() / pairs.len() as f64)
        }
        KdSignal::Reported(v) if v.is_finite() && *v >= 0.0 => Ok(*v),
        KdSignal::Reported(v) => Err(Error::Validation(format!(
            "reported l_kd {v} is not a finite non-negative number"
        ))),
    }
}

fn train_report(outcome: &TrainOutcome, cfg: &SkdConfig) -> Result<TrainReport> {
    let steps = outcome
        .steps
        .iter()
        .map(|s| {
            let l_kd = reduce_kd(&s.kd, cfg.kd)?;
            Ok(StepLoss {
                step: s.step,
                l_det: s.l_det,
                l_kd,
                composite: composite_loss(s.l_det, l_kd, cfg.alpha),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    canonical::snap(&TrainReport {
        job_id: outcome.job_id.clone(),
        steps,
    })
    .map_err(|e| Error::Validation(e.to_string()))
}

fn evaluate_labels(labels: &PseudoLabelSet, truth: Option<&Dataset>, cfg: &SkdConfig) -> Result<Option<EvalReport>> {
    truth
        .map(|t| {
            let report = EvalReport::compute(&labels.dataset, t, cfg.max_dets)?;
            canonical::snap(&report).map_err(|e| Error::Validation(e.to_string()))
        })
        .transpose()
}

/// Round 0: the teacher's labels, evaluated when truth is available.
pub fn seed_record(seed: &PseudoLabelSet, truth: Option<&Dataset>, cfg: &SkdConfig) -> Result<RoundRecord> {
    cfg.validate()?;
    if seed.round_index != 0 || seed.source != LabelSource::Teacher {
        return Err(Error::Validation(
            "the schedule must start from round-0 teacher labels".into(),
        ));
    }
    let labels = PseudoLabelSet::new(canonical_dataset(&seed.dataset)?, 0, LabelSource::Teacher, cfg.cap)?;
    Ok(RoundRecord {
        round_index: 0,
        metrics_vs_truth: evaluate_labels(&labels, truth, cfg)?,
        pseudo_labels: labels,
        train_report: None,
    })
}

/// Trains a fresh student on `state`'s labels and relabels every image with
/// its filtered, capped predictions.
pub fn run_round(
    state: &RoundRecord,
    images: &[TrainingImage],
    backend: &dyn DetectorTrainBackend,
    cfg: &SkdConfig,
    truth: Option<&Dataset>,
) -> Result<RoundRecord> {
    cfg.validate()?;
    let outcome = backend
        .train(&TrainRequest {
            pseudo_labels: &state.pseudo_labels,
            images,
            alpha: cfg.alpha,
            kd: cfg.kd,
        })
        .map_err(|e| Error::backend(None, e))?;
    let report = train_report(&outcome, cfg)?;

    let by_id: HashMap<u64, &TrainingImage> = images.iter().map(|i| (i.image_id, i)).collect();
    let relabeled = state
        .pseudo_labels
        .images()
        .par_iter()
        .map(|img| {
            let training = by_id
                .get(&img.image_id)
                .ok_or_else(|| Error::Validation(format!("no pixels for image {}", img.image_id)))?;
            let preds = backend
                .predict(&outcome.job_id, training)
                .map_err(|e| Error::backend(Some(img.image_id), e))?;
            Ok(AnnotatedImage {
                boxes: filter_and_cap(&preds, cfg.score_threshold, cfg.cap)?,
                ..img.clone()
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let round_index = state.round_index + 1;
    let labels = PseudoLabelSet::new(
        canonical_dataset(&Dataset::new(relabeled)?)?,
        round_index,
        LabelSource::Student,
        cfg.cap,
    )?;
    Ok(RoundRecord {
        round_index,
        metrics_vs_truth: evaluate_labels(&labels, truth, cfg)?,
        pseudo_labels: labels,
        train_report: Some(report),
    })
}

fn should_stop(records: &[RoundRecord], cfg: &SkdConfig) -> bool {
    if cfg.stop_rule != StopRule::EarlyStopOnVal || records.len() < 2 {
        return false;
    }
    let (last, earlier) = records.split_last().expect("at least two records");
    let best = earlier
        .iter()
        .filter_map(RoundRecord::map)
        .fold(f64::NEG_INFINITY, f64::max);
    last.map().is_some_and(|m| m <= best)
}

fn continue_schedule(
    mut records: Vec<RoundRecord>,
    images: &[TrainingImage],
    backend: &dyn DetectorTrainBackend,
    cfg: &SkdConfig,
    truth: Option<&Dataset>,
    store: Option<&RoundStore>,
) -> Result<Vec<RoundRecord>> {
    while records.len() <= cfg.rounds && !should_stop(&records, cfg) {
        let last = records.last().expect("schedule starts from round 0");
        let round = last.round_index + 1;
        let next = run_round(last, images, backend, cfg, truth).map_err(|e| Error::Round {
            round,
            source: Box::new(e),
        })?;
        if let Some(s) = store {
            s.write(&next).map_err(|e| Error::Round {
                round,
                source: Box::new(e),
            })?;
        }
        records.push(next);
    }
    Ok(records)
}

/// Runs rounds 1..=`cfg.rounds` from the teacher's labels. Without a backend
/// only round 0 is produced (evaluation only). Every completed round is
/// persisted when a store is given; a failed round leaves earlier rounds
/// intact on disk.
pub fn run_schedule(
    seed: &PseudoLabelSet,
    images: &[TrainingImage],
    backend: Option<&dyn DetectorTrainBackend>,
    cfg: &SkdConfig,
    truth: Option<&Dataset>,
    store: Option<&RoundStore>,
) -> Result<Vec<RoundRecord>> {
    if cfg.stop_rule == StopRule::EarlyStopOnVal && truth.is_none() {
        return Err(Error::Validation(
            "early stopping needs ground truth to validate against".into(),
        ));
    }
    let round0 = seed_record(seed, truth, cfg)?;
    if let Some(s) = store {
        s.write(&round0)?;
    }
    match backend {
        None => Ok(vec![round0]),
        Some(b) => continue_schedule(vec![round0], images, b, cfg, truth, store),
    }
}

/// Reloads every persisted round and continues the schedule from the latest.
pub fn resume(
    store: &RoundStore,
    images: &[TrainingImage],
    backend: &dyn DetectorTrainBackend,
    cfg: &SkdConfig,
    truth: Option<&Dataset>,
) -> Result<Vec<RoundRecord>> {
    cfg.validate()?;
    let records = store.load_all()?;
    if records.is_empty() {
        return Err(Error::Validation(format!(
            "{} holds no rounds to resume",
            store.root().display()
        )));
    }
    continue_schedule(records, images, backend, cfg, truth, Some(store))
}
