use std::cmp::Ordering;

/// Recall sample points 0.00, 0.01, …, 1.00.
pub const RECALL_POINTS: usize = 101;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApResult {
    pub ap: f64,
    /// Final recall of the whole ranked list.
    pub recall: f64,
    /// No ground truth existed; `ap` and `recall` are reported as 0.
    pub undefined: bool,
}

/// Interpolated average precision over `(score, is_true_positive)` pairs
/// pooled across images.
///
/// Pairs are ranked by score descending (stable). The precision envelope
/// (running maximum from the right) is sampled at 101 evenly spaced recall
/// levels; levels the list never reaches contribute 0.
pub fn average_precision(detections: &[(f64, bool)], n_truth: usize) -> ApResult {
    if n_truth == 0 {
        return ApResult {
            ap: 0.0,
            recall: 0.0,
            undefined: true,
        };
    }
    let mut ranked: Vec<(f64, bool)> = detections.to_vec();
    ranked.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal));

    let mut tp = 0usize;
    let mut recall = Vec::with_capacity(ranked.len());
    let mut precision = Vec::with_capacity(ranked.len());
    for (i, &(_, hit)) in ranked.iter().enumerate() {
        if hit {
            tp += 1;
        }
        recall.push(tp as f64 / n_truth as f64);
        precision.push(tp as f64 / (i + 1) as f64);
    }
    for i in (1..precision.len()).rev() {
        if precision[i] > precision[i - 1] {
            precision[i - 1] = precision[i];
        }
    }

    let mut sum = 0.0;
    for k in 0..RECALL_POINTS {
        let level = k as f64 / (RECALL_POINTS - 1) as f64;
        let first = recall.partition_point(|&r| r < level);
        if first < precision.len() {
            sum += precision[first];
        }
    }
    ApResult {
        ap: sum / RECALL_POINTS as f64,
        recall: recall.last().copied().unwrap_or(0.0),
        undefined: false,
    }
}
