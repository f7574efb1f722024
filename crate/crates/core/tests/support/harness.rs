//! The seeded synthetic harness: scenes with known truth and helpers that
//! run each pipeline stage on the mocks.

#![allow(dead_code)]

use attrikit::backends::{
    generate_scene_with, Density, MockGroundedDetector, MockLanguageModel, MockStudentTrainer, MockVqa, SceneParams,
    TrainingImage,
};
use attrikit::metrics::evaluate;
use attrikit::pipeline::zero_shot_labels;
use attrikit::prompt::{
    augment_lexicon, build_prompt_sequence, generate_attributes, AblationMode, PromptSequence, DEFAULT_TOP_K,
    DEFAULT_TOP_N,
};
use attrikit::skd::{run_schedule, RoundRecord, SkdConfig};
use attrikit::{AnnotatedImage, AttributeLexicon, Dataset, ImageSize};

pub const HARNESS_SCENES: u64 = 20;

pub struct Harness {
    pub images: Vec<TrainingImage>,
    pub truth: Dataset,
}

impl Harness {
    pub fn new(n: u64, seed: u64) -> Self {
        let params = SceneParams::new(ImageSize::new(224, 224).unwrap(), 16, Density::Sparse);
        let images: Vec<TrainingImage> = (0..n)
            .map(|i| {
                let scene = generate_scene_with(seed * 1000 + i, &params).unwrap();
                TrainingImage::from_scene(i + 1, scene)
            })
            .collect();
        let truth = Dataset::new(
            images
                .iter()
                .map(|img| {
                    AnnotatedImage::new(img.image_id, format!("{:06}.png", img.image_id), img.size())
                        .with_boxes(img.scene.as_ref().unwrap().truth_boxes())
                })
                .collect(),
        )
        .unwrap();
        Self { images, truth }
    }

    /// Mean prompt-quality score over every object of every scene.
    pub fn mean_quality(&self, prompts: &[String]) -> f64 {
        let per_scene: Vec<f64> = self
            .images
            .iter()
            .map(|img| MockGroundedDetector::mean_quality(prompts, img.scene.as_ref().unwrap()))
            .collect();
        per_scene.iter().sum::<f64>() / per_scene.len() as f64
    }

    /// mAP of the filtered teacher labels a prompt sequence produces.
    pub fn teacher_map(&self, prompts: &[String]) -> f64 {
        let cfg = SkdConfig::default();
        let labels = zero_shot_labels(
            prompts,
            &self.truth.without_boxes(),
            &self.images,
            &MockGroundedDetector::default(),
            cfg.score_threshold,
            cfg.cap,
        )
        .unwrap();
        evaluate(&labels.dataset, &self.truth, cfg.max_dets).unwrap().map
    }

    /// Generated and augmented attributes from the mock backends.
    pub fn lexicon(&self) -> AttributeLexicon {
        let det = MockGroundedDetector::default();
        let lexicon =
            generate_attributes(&self.images, &["nuclei".to_string()], &det, &MockVqa, DEFAULT_TOP_K).unwrap();
        augment_lexicon(&lexicon, &MockLanguageModel::default()).unwrap()
    }

    /// The ranked prompt sequence over the augmented lexicon.
    pub fn prompt_sequence(&self) -> PromptSequence {
        let det = MockGroundedDetector::default();
        build_prompt_sequence(&self.lexicon(), &self.images, &det, DEFAULT_TOP_N, AblationMode::Full).unwrap()
    }

    pub fn distill(&self, prompts: &[String], rounds: usize) -> Vec<RoundRecord> {
        let cfg = SkdConfig {
            rounds,
            ..SkdConfig::default()
        };
        let seed = zero_shot_labels(
            prompts,
            &self.truth.without_boxes(),
            &self.images,
            &MockGroundedDetector::default(),
            cfg.score_threshold,
            cfg.cap,
        )
        .unwrap();
        run_schedule(
            &seed,
            &self.images,
            Some(&MockStudentTrainer::default()),
            &cfg,
            Some(&self.truth),
            None,
        )
        .unwrap()
    }
}

pub fn strings(s: &[&str]) -> Vec<String> {
    s.iter().map(|x| x.to_string()).collect()
}
