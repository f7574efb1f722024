//! Every model touchpoint goes through one of four traits: grounded
//! detection, visual question answering, word-list generation and student
//! training. Deterministic mocks back them for tests and desk-scale runs;
//! [`RemoteBackend`] speaks the `/v1` gateway protocol for real models.

mod hashvec;
mod imageset;
mod mock_ground;
mod mock_lm;
mod mock_student;
mod mock_vqa;
mod remote;
mod scene;
pub mod wire;

use std::path::PathBuf;
use std::sync::Arc;

use image::RgbImage;

use crate::embedding::EmbeddingVector;
use crate::error::BackendError;
use crate::geometry::{BBox, ImageSize};
use crate::labels::PseudoLabelSet;
use crate::skd::{FeaturePair, KdReduction};

pub use hashvec::{hash_unit_vector, EMBEDDING_DIM};
pub use imageset::{load_training_images, save_scene_dataset, SceneIndex, SCENES_FILE};
pub use mock_ground::{prompt_quality, prompt_tokens, MockGroundedDetector};
pub use mock_lm::MockLanguageModel;
pub use mock_student::MockStudentTrainer;
pub use mock_vqa::{MockVqa, ECCENTRICITY_SPLIT};
pub use remote::{RemoteBackend, RemoteConfig};
pub use scene::{
    generate_scene, generate_scene_with, generate_scenes, Density, SceneMeta, SceneObject, SceneParams, SyntheticScene,
};

/// An image handed to a backend: pixels plus, for synthetic data, the scene
/// description the mocks simulate from.
#[derive(Debug, Clone)]
pub struct TrainingImage {
    pub image_id: u64,
    pub raster: Arc<RgbImage>,
    pub scene: Option<Arc<SceneMeta>>,
    /// On-disk location, when the image was loaded from a dataset.
    pub path: Option<PathBuf>,
}

impl TrainingImage {
    pub fn new(image_id: u64, raster: RgbImage) -> Self {
        Self {
            image_id,
            raster: Arc::new(raster),
            scene: None,
            path: None,
        }
    }

    pub fn from_scene(image_id: u64, scene: SyntheticScene) -> Self {
        Self {
            image_id,
            raster: Arc::new(scene.raster),
            scene: Some(Arc::new(scene.meta)),
            path: None,
        }
    }

    pub fn size(&self) -> ImageSize {
        ImageSize {
            width: self.raster.width(),
            height: self.raster.height(),
        }
    }

    pub(crate) fn scene_meta(&self) -> Result<&SceneMeta, BackendError> {
        self.scene
            .as_deref()
            .ok_or(BackendError::MissingMetadata(self.image_id))
    }
}

/// Detections for a prompt sequence with the embeddings used for relevance:
/// one visual embedding per box and one text embedding for the prompts.
#[derive(Debug, Clone, PartialEq)]
pub struct Grounding {
    pub boxes: Vec<BBox>,
    pub box_embeddings: Vec<EmbeddingVector>,
    pub prompt_embedding: EmbeddingVector,
}

pub trait GroundedDetectorBackend: Send + Sync {
    fn ground(&self, prompts: &[String], image: &TrainingImage) -> Result<Grounding, BackendError>;
}

pub trait CaptionVqaBackend: Send + Sync {
    fn answer(&self, patch: &RgbImage, question: &str) -> Result<String, BackendError>;
}

pub trait LanguageBackend: Send + Sync {
    fn word_list(&self, query: &str) -> Result<Vec<String>, BackendError>;
}

/// What a student is trained on and how distillation is reduced.
#[derive(Debug, Clone, Copy)]
pub struct TrainRequest<'a> {
    pub pseudo_labels: &'a PseudoLabelSet,
    pub images: &'a [TrainingImage],
    pub alpha: f64,
    pub kd: KdReduction,
}

/// Distillation signal for one training step: raw feature pairs for the
/// controller to reduce, or a loss the backend already computed.
#[derive(Debug, Clone, PartialEq)]
pub enum KdSignal {
    Features(Vec<FeaturePair>),
    Reported(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainStep {
    pub step: usize,
    pub l_det: f64,
    pub kd: KdSignal,
}

/// A converged student, addressable by `job_id` for prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub job_id: String,
    pub steps: Vec<TrainStep>,
}

pub trait DetectorTrainBackend: Send + Sync {
    /// Trains a fresh student to convergence.
    fn train(&self, request: &TrainRequest<'_>) -> Result<TrainOutcome, BackendError>;

    fn predict(&self, job_id: &str, image: &TrainingImage) -> Result<Vec<BBox>, BackendError>;
}
