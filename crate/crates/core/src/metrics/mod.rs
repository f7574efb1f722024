//! COCO-style detection scoring: greedy matching, 101-point interpolated AP
//! and average recall over IoU thresholds 0.50:0.05:0.95.
//!
//! Evaluation is class-agnostic (single "nucleus" category) and has no area
//! breakdown.

mod ap;
mod matching;

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::score_order;
use crate::labels::{miou_nearest_dataset, Dataset};

pub use ap::{average_precision, ApResult, RECALL_POINTS};
pub use matching::{match_greedy, Matching};

pub const DEFAULT_MAX_DETS: usize = 100;

/// The ten IoU thresholds 0.50, 0.55, …, 0.95.
///
/// Built as `(50 + 5k) / 100` so that e.g. an IoU of exactly 80/100 meets
/// the 0.80 threshold.
pub fn iou_thresholds() -> [f64; 10] {
    std::array::from_fn(|k| (50 + 5 * k) as f64 / 100.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub threshold: f64,
    pub ap: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionMetrics {
    pub map: f64,
    pub ap50: f64,
    pub ap75: f64,
    pub ar: f64,
    pub per_threshold: Vec<ThresholdResult>,
    pub max_dets: usize,
    pub n_truth: usize,
    pub n_pred: usize,
    /// Set when there was no ground truth at all; AP is reported as 0.
    pub undefined: bool,
}

/// Detection metrics plus the nearest-IoU pseudo-label diagnostic, as
/// written to metrics reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(flatten)]
    pub detection: DetectionMetrics,
    /// Absent when there were no predictions to score.
    pub miou_nearest: Option<f64>,
}

impl EvalReport {
    /// Scores `preds` against `truth` with both the COCO metrics and the
    /// nearest-IoU diagnostic.
    pub fn compute(preds: &Dataset, truth: &Dataset, max_dets: usize) -> Result<Self> {
        let detection = evaluate(preds, truth, max_dets)?;
        let miou_nearest = if preds.box_count() == 0 {
            None
        } else {
            Some(miou_nearest_dataset(preds, truth)?)
        };
        Ok(Self {
            detection,
            miou_nearest,
        })
    }
}

/// Per-image predictions in score order (truncated) and their match flags.
struct ImageEval {
    scores: Vec<f64>,
    /// `tp[t][d]`: prediction `d` is a true positive at threshold `t`.
    tp: Vec<Vec<bool>>,
}

/// Scores `preds` against `truth`. Every prediction image id must appear in
/// `truth`; truth images absent from `preds` count as having no detections.
pub fn evaluate(preds: &Dataset, truth: &Dataset, max_dets: usize) -> Result<DetectionMetrics> {
    if max_dets == 0 {
        return Err(Error::Validation("max_dets must be at least 1".into()));
    }
    let pred_index: HashMap<u64, usize> = preds
        .images
        .iter()
        .enumerate()
        .map(|(i, img)| (img.image_id, i))
        .collect();
    if pred_index.len() != preds.images.len() {
        return Err(Error::Validation("duplicate image id in predictions".into()));
    }
    for img in &preds.images {
        if truth.get(img.image_id).is_none() {
            return Err(Error::Validation(format!(
                "prediction image {} is not in the truth set",
                img.image_id
            )));
        }
        if img.boxes.iter().any(|b| b.score.is_none()) {
            return Err(Error::Validation(format!(
                "unscored prediction on image {}",
                img.image_id
            )));
        }
    }
    preds.validate()?;
    truth.validate()?;

    let thresholds = iou_thresholds();
    let per_image: Vec<ImageEval> = truth
        .images
        .par_iter()
        .map(|t_img| {
            let boxes = pred_index
                .get(&t_img.image_id)
                .map(|&i| preds.images[i].boxes.as_slice())
                .unwrap_or(&[]);
            let kept: Vec<_> = score_order(boxes)
                .into_iter()
                .take(max_dets)
                .map(|i| boxes[i])
                .collect();
            let tp = thresholds
                .iter()
                .map(|&thr| {
                    match_greedy(&kept, &t_img.boxes, thr)
                        .pred_to_truth
                        .iter()
                        .map(Option::is_some)
                        .collect()
                })
                .collect();
            ImageEval {
                scores: kept.iter().map(|b| b.score.unwrap_or(0.0)).collect(),
                tp,
            }
        })
        .collect();

    let n_truth = truth.box_count();
    let n_pred: usize = per_image.iter().map(|e| e.scores.len()).sum();

    let per_threshold: Vec<ThresholdResult> = thresholds
        .iter()
        .enumerate()
        .map(|(t, &threshold)| {
            let flat: Vec<(f64, bool)> = per_image
                .iter()
                .flat_map(|e| e.scores.iter().copied().zip(e.tp[t].iter().copied()))
                .collect();
            let r = average_precision(&flat, n_truth);
            ThresholdResult {
                threshold,
                ap: r.ap,
                recall: r.recall,
            }
        })
        .collect();

    let n = per_threshold.len() as f64;
    Ok(DetectionMetrics {
        map: per_threshold.iter().map(|r| r.ap).sum::<f64>() / n,
        ap50: per_threshold[0].ap,
        ap75: per_threshold[5].ap,
        ar: per_threshold.iter().map(|r| r.recall).sum::<f64>() / n,
        per_threshold,
        max_dets,
        n_truth,
        n_pred,
        undefined: n_truth == 0,
    })
}

impl DetectionMetrics {
    /// One-row text table of the headline numbers.
    pub fn table_row(&self) -> String {
        format!(
            "{:>7.3} {:>7.3} {:>7.3} {:>7.3}",
            self.map, self.ap50, self.ap75, self.ar
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BBox, ImageSize};
    use crate::labels::AnnotatedImage;

    fn ds(boxes: Vec<Vec<BBox>>) -> Dataset {
        Dataset::new(
            boxes
                .into_iter()
                .enumerate()
                .map(|(i, b)| {
                    AnnotatedImage::new(i as u64 + 1, format!("{i}.png"), ImageSize::new(64, 64).unwrap()).with_boxes(b)
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn thresholds_are_exact() {
        let t = iou_thresholds();
        assert_eq!(t[0], 0.5);
        assert_eq!(t[5], 0.75);
        assert_eq!(t[6], 80.0 / 100.0);
        assert_eq!(t[9], 0.95);
    }

    #[test]
    fn perfect_predictions() {
        let truth = ds(vec![vec![BBox::new(0., 0., 10., 10.), BBox::new(20., 20., 30., 35.)]]);
        let preds = ds(vec![truth.images[0]
            .boxes
            .iter()
            .map(|b| b.with_score(Some(1.0)))
            .collect()]);
        let m = evaluate(&preds, &truth, 100).unwrap();
        assert_eq!((m.map, m.ap50, m.ap75, m.ar), (1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn hand_derived_case() {
        let truth = ds(vec![vec![BBox::new(0., 0., 10., 10.)]]);
        let preds = ds(vec![vec![BBox::scored(0., 0., 10., 8., 0.9)]]);
        let m = evaluate(&preds, &truth, 100).unwrap();
        assert_eq!(m.map, 0.7);
        assert_eq!(m.ap50, 1.0);
        assert_eq!(m.ap75, 1.0);
        assert_eq!(m.ar, 0.7);
    }

    #[test]
    fn no_predictions_all_zero() {
        let truth = ds(vec![vec![BBox::new(0., 0., 10., 10.)]]);
        let m = evaluate(&Dataset::default(), &truth, 100).unwrap();
        assert_eq!((m.map, m.ap50, m.ap75, m.ar), (0.0, 0.0, 0.0, 0.0));
        assert!(!m.undefined);
    }

    #[test]
    fn empty_truth_is_flagged() {
        let truth = ds(vec![vec![]]);
        let m = evaluate(&truth.clone(), &truth, 100).unwrap();
        assert!(m.undefined);
        assert_eq!(m.map, 0.0);
    }

    #[test]
    fn misaligned_ids_rejected() {
        let truth = ds(vec![vec![BBox::new(0., 0., 10., 10.)]]);
        let mut preds = truth.clone();
        preds.images[0].image_id = 99;
        assert!(evaluate(&preds, &truth, 100).is_err());
    }

    #[test]
    fn max_dets_truncates_per_image() {
        let truth = ds(vec![vec![BBox::new(0., 0., 10., 10.), BBox::new(20., 20., 30., 30.)]]);
        let preds = ds(vec![vec![
            BBox::scored(0., 0., 10., 10., 0.9),
            BBox::scored(20., 20., 30., 30., 0.8),
        ]]);
        let m = evaluate(&preds, &truth, 1).unwrap();
        assert_eq!(m.ar, 0.5);
    }
}
