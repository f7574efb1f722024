//! Zero-shot labeling: the ranked prompt sequence is fed to the grounded
//! detector and its filtered detections become the round-0 pseudo labels.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::backends::{GroundedDetectorBackend, TrainingImage};
use crate::error::{Error, Result};
use crate::labels::{canonical_dataset, filter_and_cap, AnnotatedImage, Dataset, LabelSource, PseudoLabelSet};

/// Raw detections for every image of `reference`, in its order.
pub fn detect_dataset(
    prompts: &[String],
    reference: &Dataset,
    images: &[TrainingImage],
    detector: &dyn GroundedDetectorBackend,
) -> Result<Dataset> {
    if prompts.is_empty() {
        return Err(Error::Validation("detection needs at least one prompt".into()));
    }
    if reference.images.is_empty() {
        return Err(Error::Validation("detection needs at least one image".into()));
    }
    let by_id: HashMap<u64, &TrainingImage> = images.iter().map(|i| (i.image_id, i)).collect();
    let detected = reference
        .images
        .par_iter()
        .map(|img| {
            let pixels = by_id
                .get(&img.image_id)
                .ok_or_else(|| Error::Validation(format!("no pixels for image {}", img.image_id)))?;
            let g = detector
                .ground(prompts, pixels)
                .map_err(|e| Error::backend(Some(img.image_id), e))?;
            Ok(AnnotatedImage {
                boxes: g.boxes,
                ..img.clone()
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(detected)
}

/// Teacher pseudo labels: detections filtered by score and capped per image.
pub fn zero_shot_labels(
    prompts: &[String],
    reference: &Dataset,
    images: &[TrainingImage],
    detector: &dyn GroundedDetectorBackend,
    score_threshold: f64,
    cap: usize,
) -> Result<PseudoLabelSet> {
    let mut raw = detect_dataset(prompts, reference, images, detector)?;
    for img in &mut raw.images {
        img.boxes = filter_and_cap(&img.boxes, score_threshold, cap)?;
    }
    PseudoLabelSet::new(canonical_dataset(&raw)?, 0, LabelSource::Teacher, cap)
}
