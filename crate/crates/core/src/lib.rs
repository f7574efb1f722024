//! Label-free nuclei detection: attribute-driven auto-prompting for a
//! grounded detector, self-trained knowledge distillation, COCO-style
//! evaluation, and the backend interfaces that isolate every model call.

pub mod backends;
pub mod canonical;
pub mod embedding;
pub mod error;
pub mod geometry;
pub mod labels;
pub mod metrics;
pub mod pipeline;
pub mod prompt;
pub mod skd;

pub use embedding::{cosine, EmbeddingVector};
pub use error::{BackendError, Error, Result};
pub use geometry::{clip_and_crop_rect, iou, nms, BBox, ImageSize};
pub use labels::{AnnotatedImage, Dataset, LabelSource, PseudoLabelSet};
pub use metrics::{evaluate, DetectionMetrics, EvalReport};
pub use prompt::{
    assemble_prompt, AttributeKind, AttributeLexicon, AttributeOrigin, AttributeWord, Prompt, PromptSequence,
    RelevanceReport,
};
pub use skd::{composite_loss, kd_loss, FeaturePair, KdReduction, RoundRecord, SkdConfig};
