use std::collections::HashMap;

use super::{Dataset, PseudoLabelSet};
use crate::error::{Error, Result};

/// Mean over pseudo boxes of each box's best IoU against the ground truth of
/// the same image. Boxes on images without truth contribute 0.
pub fn miou_nearest(pseudo: &PseudoLabelSet, truth: &Dataset) -> Result<f64> {
    miou_nearest_dataset(&pseudo.dataset, truth)
}

/// [`miou_nearest`] for any box dataset, e.g. raw predictions.
pub fn miou_nearest_dataset(preds: &Dataset, truth: &Dataset) -> Result<f64> {
    let by_id: HashMap<u64, usize> = truth
        .images
        .iter()
        .enumerate()
        .map(|(i, img)| (img.image_id, i))
        .collect();

    let mut total = 0.0;
    let mut count = 0usize;
    for img in &preds.images {
        let pos = by_id
            .get(&img.image_id)
            .ok_or_else(|| Error::Validation(format!("pseudo image {} has no truth entry", img.image_id)))?;
        let truths = &truth.images[*pos].boxes;
        for p in &img.boxes {
            total += truths.iter().map(|t| p.iou_unchecked(t)).fold(0.0, f64::max);
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::Validation("pseudo-label set is empty".into()));
    }
    Ok(total / count as f64)
}
