//! Simulated student detector.
//!
//! Training memorizes the pseudo labels. Prediction moves each pseudo box a
//! fixed fraction of the way toward the truth box it overlaps most, and adds
//! back the first truth box no pseudo label covers (one per image, only when
//! the image has any pseudo label). Repeated rounds therefore contract toward
//! the ground truth.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use sha2::{Digest, Sha256};

use super::hashvec::hash_unit_vector;
use super::{DetectorTrainBackend, KdSignal, TrainOutcome, TrainRequest, TrainStep, TrainingImage};
use crate::embedding::EmbeddingVector;
use crate::error::BackendError;
use crate::geometry::BBox;
use crate::labels::dataset_to_coco_string;
use crate::skd::FeaturePair;

/// Stored predictions of one finished job, by image id.
type JobPredictions = HashMap<u64, Vec<BBox>>;

/// A truth box counts as covered when some pseudo label reaches this IoU.
const COVERED_IOU: f64 = 0.3;

#[derive(Debug)]
pub struct MockStudentTrainer {
    /// Fraction of the residual to the truth box removed per round.
    pub learning_factor: f64,
    pub epochs: usize,
    jobs: Mutex<HashMap<String, Arc<JobPredictions>>>,
}

impl Default for MockStudentTrainer {
    fn default() -> Self {
        Self {
            learning_factor: 0.5,
            epochs: 5,
            jobs: Mutex::new(HashMap::new()),
        }
    }
}

fn best_truth(b: &BBox, truths: &[BBox]) -> Option<(usize, f64)> {
    truths
        .iter()
        .enumerate()
        .map(|(i, t)| (i, b.iou_unchecked(t)))
        .filter(|&(_, v)| v > 0.0)
        .fold(None, |acc, (i, v)| match acc {
            Some((_, best)) if best >= v => acc,
            _ => Some((i, v)),
        })
}

impl MockStudentTrainer {
    fn refine(&self, labels: &[BBox], truths: &[BBox]) -> Vec<BBox> {
        let k = self.learning_factor;
        let mut out: Vec<BBox> = labels
            .iter()
            .map(|b| match best_truth(b, truths) {
                Some((i, _)) => {
                    let t = &truths[i];
                    BBox {
                        x_min: b.x_min + k * (t.x_min - b.x_min),
                        y_min: b.y_min + k * (t.y_min - b.y_min),
                        x_max: b.x_max + k * (t.x_max - b.x_max),
                        y_max: b.y_max + k * (t.y_max - b.y_max),
                        score: b.score,
                    }
                }
                None => *b,
            })
            .collect();

        if !labels.is_empty() {
            let missed = truths
                .iter()
                .find(|t| labels.iter().all(|b| b.iou_unchecked(t) < COVERED_IOU));
            if let Some(t) = missed {
                let floor = labels.iter().filter_map(|b| b.score).fold(f64::INFINITY, f64::min);
                out.push(t.with_score(Some(if floor.is_finite() { floor } else { 0.5 })));
            }
        }
        out
    }

    fn job_id(request: &TrainRequest<'_>) -> String {
        let text = dataset_to_coco_string(&request.pseudo_labels.dataset).unwrap_or_default();
        let digest = Sha256::digest(format!("{}|{}|{text}", request.alpha, request.kd.wire_name()).as_bytes());
        let hex: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
        format!("mock-{hex}")
    }
}

impl DetectorTrainBackend for MockStudentTrainer {
    fn train(&self, request: &TrainRequest<'_>) -> Result<TrainOutcome, BackendError> {
        if request.pseudo_labels.box_count() == 0 {
            return Err(BackendError::Training("pseudo-label set is empty".into()));
        }
        let scenes: HashMap<u64, &TrainingImage> = request.images.iter().map(|i| (i.image_id, i)).collect();

        let mut residual = 0.0;
        let mut n = 0usize;
        let mut seeds = Vec::new();
        for img in request.pseudo_labels.images() {
            let training = scenes
                .get(&img.image_id)
                .ok_or_else(|| BackendError::Training(format!("no image data for image {}", img.image_id)))?;
            let meta = training.scene_meta()?;
            let truths = meta.truth_boxes();
            for b in &img.boxes {
                residual += 1.0 - best_truth(b, &truths).map_or(0.0, |(_, v)| v);
                n += 1;
            }
            seeds.push(meta.seed);
        }
        let base = 0.1 + residual / n as f64;

        let steps = (0..self.epochs)
            .map(|epoch| {
                let decay = 0.5f64.powi(epoch as i32);
                let pairs = seeds
                    .iter()
                    .map(|seed| {
                        let teacher = hash_unit_vector(&format!("teacher:{seed}"));
                        let offset = hash_unit_vector(&format!("student-init:{seed}"));
                        let student: Vec<f64> = teacher
                            .values()
                            .iter()
                            .zip(offset.values())
                            .map(|(t, o)| t + 0.5 * decay * o)
                            .collect();
                        let student = EmbeddingVector::new(student).expect("finite features");
                        FeaturePair::new(teacher, student).expect("equal dims")
                    })
                    .collect();
                TrainStep {
                    step: epoch,
                    l_det: base * 0.6f64.powi(epoch as i32),
                    kd: KdSignal::Features(pairs),
                }
            })
            .collect();

        let job_id = Self::job_id(request);
        let labels: HashMap<u64, Vec<BBox>> = request
            .pseudo_labels
            .images()
            .iter()
            .map(|i| (i.image_id, i.boxes.clone()))
            .collect();
        self.jobs
            .lock()
            .expect("job table poisoned")
            .insert(job_id.clone(), Arc::new(labels));
        Ok(TrainOutcome { job_id, steps })
    }

    fn predict(&self, job_id: &str, image: &TrainingImage) -> Result<Vec<BBox>, BackendError> {
        let job = self
            .jobs
            .lock()
            .expect("job table poisoned")
            .get(job_id)
            .cloned()
            .ok_or_else(|| BackendError::UnknownJob(job_id.to_string()))?;
        let labels = job
            .get(&image.image_id)
            .ok_or_else(|| BackendError::Training(format!("image {} was not part of job {job_id}", image.image_id)))?;
        let truths = image.scene_meta()?.truth_boxes();
        Ok(self.refine(labels, &truths))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::scene::{generate_scene, Density};
    use crate::geometry::ImageSize;
    use crate::labels::{AnnotatedImage, Dataset, LabelSource, PseudoLabelSet};
    use crate::skd::KdReduction;

    fn images(n: u64) -> Vec<TrainingImage> {
        (1..=n)
            .map(|id| {
                let s = generate_scene(id * 31, 8, ImageSize::new(128, 128).unwrap(), Density::Sparse).unwrap();
                TrainingImage::from_scene(id, s)
            })
            .collect()
    }

    fn pseudo_from(images: &[TrainingImage], f: impl Fn(&BBox) -> BBox) -> PseudoLabelSet {
        let ds = Dataset::new(
            images
                .iter()
                .map(|img| {
                    let boxes = img.scene.as_ref().unwrap().truth_boxes().iter().map(&f).collect();
                    AnnotatedImage::new(img.image_id, format!("{}.png", img.image_id), img.size()).with_boxes(boxes)
                })
                .collect(),
        )
        .unwrap();
        PseudoLabelSet::new(ds, 0, LabelSource::Teacher, 20).unwrap()
    }

    fn train(t: &MockStudentTrainer, p: &PseudoLabelSet, imgs: &[TrainingImage]) -> TrainOutcome {
        t.train(&TrainRequest {
            pseudo_labels: p,
            images: imgs,
            alpha: 1.0,
            kd: KdReduction::Mean,
        })
        .unwrap()
    }

    #[test]
    fn truth_is_a_fixed_point() {
        let imgs = images(3);
        let p = pseudo_from(&imgs, |b| b.with_score(Some(0.9)));
        let t = MockStudentTrainer::default();
        let job = train(&t, &p, &imgs);
        for img in &imgs {
            let pred = t.predict(&job.job_id, img).unwrap();
            let truth: Vec<_> = img
                .scene
                .as_ref()
                .unwrap()
                .truth_boxes()
                .iter()
                .map(|b| b.with_score(Some(0.9)))
                .collect();
            assert_eq!(pred, truth);
        }
    }

    #[test]
    fn offset_is_halved() {
        let imgs = images(2);
        let p = pseudo_from(&imgs, |b| b.translate(4.0, 4.0).with_score(Some(0.8)));
        let t = MockStudentTrainer::default();
        let job = train(&t, &p, &imgs);
        for img in &imgs {
            let truths = img.scene.as_ref().unwrap().truth_boxes();
            let pred = t.predict(&job.job_id, img).unwrap();
            for (pb, tb) in pred.iter().zip(&truths) {
                assert!((pb.x_min - tb.x_min).abs() <= 2.0 + 1e-9);
                assert!((pb.y_min - tb.y_min).abs() <= 2.0 + 1e-9);
            }
        }
    }

    #[test]
    fn missed_box_is_recovered_once_per_round() {
        let imgs = images(1);
        let mut p = pseudo_from(&imgs, |b| b.with_score(Some(0.7)));
        p.dataset.images[0].boxes.truncate(5);
        let t = MockStudentTrainer::default();
        let job = train(&t, &p, &imgs);
        let pred = t.predict(&job.job_id, &imgs[0]).unwrap();
        assert_eq!(pred.len(), 6);
        assert_eq!(
            pred[5],
            imgs[0].scene.as_ref().unwrap().objects[5].bbox.with_score(Some(0.7))
        );
    }

    #[test]
    fn empty_set_fails_training() {
        let imgs = images(1);
        let p = pseudo_from(&imgs, |b| *b);
        let empty = PseudoLabelSet {
            dataset: p.dataset.without_boxes(),
            ..p
        };
        let err = MockStudentTrainer::default()
            .train(&TrainRequest {
                pseudo_labels: &empty,
                images: &imgs,
                alpha: 1.0,
                kd: KdReduction::Mean,
            })
            .unwrap_err();
        assert!(matches!(err, BackendError::Training(_)));
    }

    #[test]
    fn losses_decrease_and_unknown_job_errors() {
        let imgs = images(2);
        let p = pseudo_from(&imgs, |b| b.translate(3.0, -2.0).with_score(Some(0.8)));
        let t = MockStudentTrainer::default();
        let job = train(&t, &p, &imgs);
        assert!(job.steps.windows(2).all(|w| w[1].l_det < w[0].l_det));
        assert!(matches!(t.predict("nope", &imgs[0]), Err(BackendError::UnknownJob(_))));
    }
}
