use crate::geometry::{score_order, BBox};

/// Result of one-to-one greedy matching.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    /// Indexed like the input predictions: the matched truth index, if any.
    pub pred_to_truth: Vec<Option<usize>>,
    pub truth_to_pred: Vec<Option<usize>>,
}

impl Matching {
    pub fn true_positives(&self) -> usize {
        self.pred_to_truth.iter().filter(|m| m.is_some()).count()
    }
}

/// COCO matching: predictions in descending score order each take the
/// unmatched truth with the highest IoU, provided it reaches `iou_threshold`.
/// On equal IoU the lower truth index wins.
pub fn match_greedy(preds: &[BBox], truths: &[BBox], iou_threshold: f64) -> Matching {
    let mut pred_to_truth = vec![None; preds.len()];
    let mut truth_to_pred = vec![None; truths.len()];
    for d in score_order(preds) {
        let mut best: Option<(usize, f64)> = None;
        for (g, t) in truths.iter().enumerate() {
            if truth_to_pred[g].is_some() {
                continue;
            }
            let v = preds[d].iou_unchecked(t);
            if v >= iou_threshold && best.is_none_or(|(_, b)| v > b) {
                best = Some((g, v));
            }
        }
        if let Some((g, _)) = best {
            pred_to_truth[d] = Some(g);
            truth_to_pred[g] = Some(d);
        }
    }
    Matching {
        pred_to_truth,
        truth_to_pred,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_match() {
        let t = BBox::new(0., 0., 10., 10.);
        let m = match_greedy(&[t.with_score(Some(0.5))], &[t], 0.5);
        assert_eq!(m.pred_to_truth, vec![Some(0)]);
    }

    #[test]
    fn one_to_one() {
        let t = BBox::new(0., 0., 10., 10.);
        let preds = [t.with_score(Some(0.3)), t.with_score(Some(0.8))];
        let m = match_greedy(&preds, &[t], 0.5);
        assert_eq!(m.pred_to_truth, vec![None, Some(0)]);
        assert_eq!(m.truth_to_pred, vec![Some(1)]);
    }

    #[test]
    fn higher_score_wins_even_with_lower_iou() {
        let t = BBox::new(0., 0., 10., 10.);
        // IoU 0.6 and 0.8 against the truth
        let p1 = BBox::scored(0., 0., 10., 6., 0.9);
        let p2 = BBox::scored(0., 0., 10., 8., 0.8);
        assert_eq!(p1.iou_unchecked(&t), 0.6);
        assert_eq!(p2.iou_unchecked(&t), 0.8);
        let m = match_greedy(&[p1, p2], &[t], 0.5);
        assert_eq!(m.pred_to_truth, vec![Some(0), None]);
    }

    #[test]
    fn best_available_truth_is_taken() {
        let a = BBox::new(0., 0., 10., 10.);
        let b = BBox::new(0., 0., 10., 9.);
        let p = BBox::scored(0., 0., 10., 9., 0.9);
        let m = match_greedy(&[p], &[a, b], 0.5);
        assert_eq!(m.pred_to_truth, vec![Some(1)]);
    }
}
