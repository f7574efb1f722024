//! Simulated grounded detector.
//!
//! Each object gets a prompt-quality score `q` in [0, 1]: the share of its
//! attribute labels (noun, shape, color, shape degree, color degree) that a
//! prompt names, discounted by `0.9^rank` for prompts later in the sequence,
//! maximized over the sequence. Recall, localization error and confidence all
//! follow `q`. The per-object random draws depend only on the scene seed and
//! object index, so two prompt sequences on the same scene differ only
//! through `q`.
//!
//! The ordering discount is simulation behavior chosen to make prompt order
//! observable; it is not a property of any real detector.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::hashvec::{hash_unit_vector, EMBEDDING_DIM};
use super::scene::{mix_seed, SceneMeta, SceneObject};
use super::{GroundedDetectorBackend, Grounding, TrainingImage};
use crate::embedding::EmbeddingVector;
use crate::error::BackendError;
use crate::geometry::{clip_and_crop_rect, BBox};

pub const RANK_DECAY: f64 = 0.9;

/// Lowercased word tokens of a prompt; hyphenated words stay whole.
pub fn prompt_tokens(prompt: &str) -> Vec<String> {
    prompt
        .to_lowercase()
        .split(|c: char| !(c.is_alphanumeric() || c == '-'))
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

fn contains_phrase(tokens: &[String], phrase: &str) -> bool {
    let words: Vec<&str> = phrase.split_whitespace().collect();
    !words.is_empty()
        && tokens
            .windows(words.len())
            .any(|w| w.iter().zip(&words).all(|(a, b)| a == b))
}

/// Prompt-quality score of one object under a prompt sequence.
pub fn prompt_quality(prompts: &[String], object: &SceneObject, noun: &str) -> f64 {
    let labels = object.labels(noun);
    prompts
        .iter()
        .enumerate()
        .map(|(rank, p)| {
            let tokens = prompt_tokens(p);
            let hits = labels.iter().filter(|l| contains_phrase(&tokens, l)).count();
            RANK_DECAY.powi(rank as i32) * hits as f64 / labels.len() as f64
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy)]
pub struct MockGroundedDetector {
    /// Recall probability at q = 0 and its gain up to q = 1.
    pub recall: (f64, f64),
    /// Corner jitter as a fraction of box size: floor plus gain at q = 0.
    pub jitter: (f64, f64),
    /// Amplitude of per-box embedding noise.
    pub embedding_noise: f64,
}

impl Default for MockGroundedDetector {
    fn default() -> Self {
        Self {
            recall: (0.2, 0.7),
            jitter: (0.06, 0.30),
            embedding_noise: 0.15,
        }
    }
}

fn bag_embedding<'a>(weighted_words: impl Iterator<Item = (&'a str, f64)>) -> Vec<f64> {
    let mut acc = vec![0.0; EMBEDDING_DIM];
    for (word, weight) in weighted_words {
        for (a, v) in acc.iter_mut().zip(hash_unit_vector(word).values()) {
            *a += weight * v;
        }
    }
    acc
}

fn unit(values: Vec<f64>) -> EmbeddingVector {
    EmbeddingVector::new(values)
        .ok()
        .and_then(|v| v.normalized())
        .unwrap_or_else(|| hash_unit_vector(""))
}

impl MockGroundedDetector {
    fn prompt_embedding(prompts: &[String]) -> EmbeddingVector {
        let tokens: Vec<(String, f64)> = prompts
            .iter()
            .enumerate()
            .flat_map(|(rank, p)| {
                let w = RANK_DECAY.powi(rank as i32);
                prompt_tokens(p).into_iter().map(move |t| (t, w))
            })
            .collect();
        unit(bag_embedding(tokens.iter().map(|(t, w)| (t.as_str(), *w))))
    }

    fn detect_object(&self, scene: &SceneMeta, index: usize, q: f64) -> Option<(BBox, EmbeddingVector)> {
        let obj = &scene.objects[index];
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(scene.seed, &[0x6A0D, index as u64]));
        let u_recall: f64 = rng.random();
        let offsets: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let u_score: f64 = rng.random();
        let noise: Vec<f64> = (0..EMBEDDING_DIM)
            .map(|_| rng.random_range(-1.0..1.0) * self.embedding_noise)
            .collect();

        if u_recall >= self.recall.0 + self.recall.1 * q {
            return None;
        }
        let spread = self.jitter.0 + self.jitter.1 * (1.0 - q);
        let (w, h) = (obj.bbox.width(), obj.bbox.height());
        let score = (0.35 + 0.55 * q + 0.1 * (u_score - 0.5)).clamp(0.0, 1.0);
        let jittered = BBox::scored(
            obj.bbox.x_min + offsets[0] * spread * w,
            obj.bbox.y_min + offsets[1] * spread * h,
            obj.bbox.x_max + offsets[2] * spread * w,
            obj.bbox.y_max + offsets[3] * spread * h,
            score,
        );
        let b = clip_and_crop_rect(&jittered, scene.size).ok()?;

        let words = obj.label_words(&scene.noun);
        let mut r = bag_embedding(words.iter().map(|w| (w.as_str(), 1.0)));
        for (a, n) in r.iter_mut().zip(noise) {
            *a += n;
        }
        Some((b, unit(r)))
    }

    /// Mean prompt quality over the objects of a scene.
    pub fn mean_quality(prompts: &[String], scene: &SceneMeta) -> f64 {
        if scene.objects.is_empty() {
            return 0.0;
        }
        scene
            .objects
            .iter()
            .map(|o| prompt_quality(prompts, o, &scene.noun))
            .sum::<f64>()
            / scene.objects.len() as f64
    }
}

impl GroundedDetectorBackend for MockGroundedDetector {
    fn ground(&self, prompts: &[String], image: &TrainingImage) -> Result<Grounding, BackendError> {
        let scene = image.scene_meta()?;
        let prompt_embedding = Self::prompt_embedding(prompts);
        let mut boxes = Vec::new();
        let mut box_embeddings = Vec::new();
        if !prompts.is_empty() {
            for (i, obj) in scene.objects.iter().enumerate() {
                let q = prompt_quality(prompts, obj, &scene.noun);
                if let Some((b, e)) = self.detect_object(scene, i, q) {
                    boxes.push(b);
                    box_embeddings.push(e);
                }
            }
        }
        Ok(Grounding {
            boxes,
            box_embeddings,
            prompt_embedding,
        })
    }
}
