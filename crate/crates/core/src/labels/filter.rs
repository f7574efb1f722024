use crate::error::{Error, Result};
use crate::geometry::{score_order, BBox};

/// Pseudo seeds kept per image.
pub const DEFAULT_CAP: usize = 20;
/// Minimum detector confidence for a box to become a pseudo label.
pub const DEFAULT_SCORE_THRESHOLD: f64 = 0.5;

/// Drops boxes scoring below `score_threshold` and keeps the `cap` best,
/// ordered by score descending (stable on ties).
pub fn filter_and_cap(detections: &[BBox], score_threshold: f64, cap: usize) -> Result<Vec<BBox>> {
    if cap == 0 {
        return Err(Error::Validation("cap must be at least 1".into()));
    }
    if detections.iter().any(|b| b.score.is_none()) {
        return Err(Error::Validation("filter_and_cap needs scored boxes".into()));
    }
    Ok(score_order(detections)
        .into_iter()
        .map(|i| detections[i])
        .filter(|b| b.score.unwrap_or(0.0) >= score_threshold)
        .take(cap)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(score: f64) -> BBox {
        BBox::scored(0., 0., 1., 1., score)
    }

    #[test]
    fn caps_at_twenty() {
        let boxes = vec![s(0.9); 25];
        assert_eq!(filter_and_cap(&boxes, 0.5, DEFAULT_CAP).unwrap().len(), 20);
    }

    #[test]
    fn all_below_threshold() {
        assert!(filter_and_cap(&[s(0.1), s(0.2)], 0.5, 20).unwrap().is_empty());
    }

    #[test]
    fn filters_and_sorts() {
        let out = filter_and_cap(&[s(0.9), s(0.3), s(0.7)], 0.5, 20).unwrap();
        let scores: Vec<_> = out.iter().map(|b| b.score.unwrap()).collect();
        assert_eq!(scores, vec![0.9, 0.7]);
    }

    #[test]
    fn rejects_zero_cap() {
        assert!(filter_and_cap(&[s(0.9)], 0.5, 0).is_err());
    }

    proptest! {
        #[test]
        fn output_respects_cap_and_threshold(
            scores in prop::collection::vec(0.0..=1.0f64, 0..60),
            thr in 0.0..=1.0f64,
            cap in 1usize..30,
        ) {
            let boxes: Vec<_> = scores.iter().map(|&x| s(x)).collect();
            let out = filter_and_cap(&boxes, thr, cap).unwrap();
            prop_assert!(out.len() <= cap);
            prop_assert!(out.iter().all(|b| b.score.unwrap() >= thr));
            prop_assert!(out.windows(2).all(|w| w[0].score >= w[1].score));
        }
    }
}
