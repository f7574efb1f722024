//! Independent reference implementations for the numeric kernels, written
//! from the definitions rather than from the library code.

#![allow(dead_code)]

use attrikit::backends::{GroundedDetectorBackend, TrainingImage};
use attrikit::labels::CropWindow;
use attrikit::{AnnotatedImage, BBox, Dataset, ImageSize};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleMetrics {
    pub map: f64,
    pub ap50: f64,
    pub ap75: f64,
    pub ar: f64,
    pub ap: Vec<f64>,
    pub recall: Vec<f64>,
}

fn iou(a: &BBox, b: &BBox) -> f64 {
    let w = (a.x_max.min(b.x_max) - a.x_min.max(b.x_min)).max(0.0);
    let h = (a.y_max.min(b.y_max) - a.y_min.max(b.y_min)).max(0.0);
    let inter = w * h;
    let area = |r: &BBox| (r.x_max - r.x_min) * (r.y_max - r.y_min);
    let union = area(a) + area(b) - inter;
    if union > 0.0 {
        inter / union
    } else {
        0.0
    }
}

/// Predictions of one image ranked by score, best first; equal scores keep
/// input order.
fn ranked(boxes: &[BBox]) -> Vec<BBox> {
    let mut idx: Vec<usize> = (0..boxes.len()).collect();
    idx.sort_by(|&i, &j| {
        let (si, sj) = (boxes[i].score.unwrap(), boxes[j].score.unwrap());
        sj.partial_cmp(&si).unwrap().then(i.cmp(&j))
    });
    idx.into_iter().map(|i| boxes[i]).collect()
}

/// Hit flags for ranked predictions: each takes the free truth with the
/// largest IoU at or above `thr`, lowest index on ties.
fn hits(preds: &[BBox], truths: &[BBox], thr: f64) -> Vec<bool> {
    let mut taken = vec![false; truths.len()];
    preds
        .iter()
        .map(|p| {
            let mut best: Option<usize> = None;
            for g in 0..truths.len() {
                if taken[g] || iou(p, &truths[g]) < thr {
                    continue;
                }
                if best.is_none() || iou(p, &truths[g]) > iou(p, &truths[best.unwrap()]) {
                    best = Some(g);
                }
            }
            if let Some(g) = best {
                taken[g] = true;
            }
            best.is_some()
        })
        .collect()
}

/// Interpolated precision at each of 101 recall levels is the best precision
/// at any rank whose recall reaches the level.
fn ap_and_recall(mut pooled: Vec<(f64, bool)>, n_truth: usize) -> (f64, f64) {
    if n_truth == 0 {
        return (0.0, 0.0);
    }
    // stable: equal scores keep image order
    pooled.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let mut points = Vec::new();
    let mut tp = 0;
    for (rank, (_, hit)) in pooled.iter().enumerate() {
        tp += *hit as usize;
        points.push((tp as f64 / n_truth as f64, tp as f64 / (rank + 1) as f64));
    }
    let mut total = 0.0;
    for k in 0..=100 {
        let level = k as f64 / 100.0;
        let best = points
            .iter()
            .filter(|(r, _)| *r >= level)
            .map(|(_, p)| *p)
            .fold(0.0, f64::max);
        total += best;
    }
    (total / 101.0, points.last().map_or(0.0, |p| p.0))
}

/// COCO-style AP and AR at IoU 0.50:0.05:0.95, class-agnostic.
pub fn brute_force_metrics(preds: &Dataset, truth: &Dataset, max_dets: usize) -> OracleMetrics {
    let mut ap = Vec::new();
    let mut recall = Vec::new();
    let n_truth: usize = truth.images.iter().map(|i| i.boxes.len()).sum();
    for k in 0..10 {
        let thr = (50 + 5 * k) as f64 / 100.0;
        let mut pooled = Vec::new();
        for t in &truth.images {
            let p = preds.images.iter().find(|p| p.image_id == t.image_id);
            let mut kept = p.map(|p| ranked(&p.boxes)).unwrap_or_default();
            kept.truncate(max_dets);
            for (b, h) in kept.iter().zip(hits(&kept, &t.boxes, thr)) {
                pooled.push((b.score.unwrap(), h));
            }
        }
        let (a, r) = ap_and_recall(pooled, n_truth);
        ap.push(a);
        recall.push(r);
    }
    OracleMetrics {
        map: ap.iter().sum::<f64>() / 10.0,
        ap50: ap[0],
        ap75: ap[5],
        ar: recall.iter().sum::<f64>() / 10.0,
        ap,
        recall,
    }
}

fn random_box(rng: &mut ChaCha8Rng, extent: f64) -> BBox {
    let x = rng.random_range(0.0..extent - 4.0);
    let y = rng.random_range(0.0..extent - 4.0);
    let w = rng.random_range(2.0..(extent - x).min(30.0));
    let h = rng.random_range(2.0..(extent - y).min(30.0));
    BBox::new(x, y, x + w, y + h)
}

/// A random detection problem: up to 10 images with up to 20 truth boxes
/// each, and predictions mixing jittered truths with strays.
pub fn random_instance(seed: u64) -> (Dataset, Dataset, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let extent = 100.0;
    let size = ImageSize::new(100, 100).unwrap();
    let n_images = rng.random_range(1..=10);
    let mut truth = Vec::new();
    let mut preds = Vec::new();
    for id in 1..=n_images as u64 {
        let truths: Vec<BBox> = (0..rng.random_range(0..=20))
            .map(|_| random_box(&mut rng, extent))
            .collect();
        let mut p = Vec::new();
        for t in &truths {
            if rng.random_bool(0.8) {
                let j = rng.random_range(0.0..0.25);
                let (w, h) = (t.x_max - t.x_min, t.y_max - t.y_min);
                let dx: [f64; 4] = std::array::from_fn(|_| rng.random_range(-j..j));
                let b = BBox::new(
                    (t.x_min + dx[0] * w).max(0.0),
                    (t.y_min + dx[1] * h).max(0.0),
                    (t.x_max + dx[2] * w).min(extent),
                    (t.y_max + dx[3] * h).min(extent),
                );
                p.push(b);
            }
        }
        for _ in 0..rng.random_range(0..=6) {
            p.push(random_box(&mut rng, extent));
        }
        p.truncate(20);
        let p = p
            .into_iter()
            .map(|b| b.with_score(Some(rng.random_range(0.0..1.0))))
            .collect();
        truth.push(AnnotatedImage::new(id, format!("{id}.png"), size).with_boxes(truths));
        preds.push(AnnotatedImage::new(id, format!("{id}.png"), size).with_boxes(p));
    }
    let max_dets = if rng.random_bool(0.2) {
        rng.random_range(1..=10)
    } else {
        100
    };
    (Dataset::new(preds).unwrap(), Dataset::new(truth).unwrap(), max_dets)
}

/// A random dataset exercising every COCO field the library writes.
pub fn random_dataset(seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(0..=8);
    let images = (0..n)
        .map(|i| {
            let id = 1 + i as u64 * rng.random_range(1..5);
            let (w, h) = (rng.random_range(8..600u32), rng.random_range(8..600u32));
            let boxes = (0..rng.random_range(0..=25))
                .map(|_| {
                    let x = rng.random_range(0.0..w as f64 - 2.0);
                    let y = rng.random_range(0.0..h as f64 - 2.0);
                    let b = BBox::new(
                        x,
                        y,
                        rng.random_range(x + 0.5..w as f64),
                        rng.random_range(y + 0.5..h as f64),
                    );
                    if rng.random_bool(0.5) {
                        b.with_score(Some(rng.random_range(0.0..1.0)))
                    } else {
                        b
                    }
                })
                .collect();
            let mut img =
                AnnotatedImage::new(id, format!("images/{id:06}.png"), ImageSize::new(w, h).unwrap()).with_boxes(boxes);
            if rng.random_bool(0.3) {
                img.crop = Some(CropWindow {
                    x: rng.random_range(0..64),
                    y: rng.random_range(0..64),
                    width: w,
                    height: h,
                });
            }
            img
        })
        .collect::<Vec<_>>();
    let mut seen = std::collections::HashSet::new();
    Dataset::new(images.into_iter().filter(|i| seen.insert(i.image_id)).collect()).unwrap()
}

/// Mean box-to-prompt cosine per image, then over images with boxes, with
/// the dot products and norms spelled out.
pub fn relevance_double_loop(
    prompt: &str,
    images: &[TrainingImage],
    detector: &dyn GroundedDetectorBackend,
) -> Option<f64> {
    let mut per_image = Vec::new();
    for img in images {
        let g = detector.ground(&[prompt.to_string()], img).unwrap();
        if g.boxes.is_empty() {
            continue;
        }
        let p = g.prompt_embedding.values();
        let p_norm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut sum = 0.0;
        for r in &g.box_embeddings {
            let r = r.values();
            let mut dot = 0.0;
            let mut r_norm = 0.0;
            for j in 0..r.len() {
                dot += r[j] * p[j];
                r_norm += r[j] * r[j];
            }
            sum += dot / (r_norm.sqrt() * p_norm);
        }
        per_image.push(sum / g.boxes.len() as f64);
    }
    if per_image.is_empty() {
        None
    } else {
        Some(per_image.iter().sum::<f64>() / per_image.len() as f64)
    }
}
