//! `/v1` gateway envelopes. Every request and response carries
//! `"version": "v1"`; unknown fields are schema violations.
//!
//! ```text
//! POST /v1/ground   {prompts, image_b64, want_embeddings} -> {boxes, box_embeddings, prompt_embedding}
//! POST /v1/vqa      {image_b64, question}                 -> {answer}
//! POST /v1/augment  {query}                               -> {words}
//! POST /v1/train    {dataset_uri, alpha, kd}              -> {job_id}
//! GET  /v1/train/{job_id}                                 -> {state, losses: [{step, l_det, l_kd}]}
//! POST /v1/predict  {job_id, image_b64}                   -> {boxes}
//! ```
//!
//! Failures answer with a non-2xx status and `{version, error: {kind, message}}`.

use std::io::Cursor;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use image::{ImageFormat, RgbImage};
use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingVector;
use crate::error::BackendError;
use crate::geometry::BBox;

pub const PROTOCOL_VERSION: &str = "v1";

fn v1() -> String {
    PROTOCOL_VERSION.to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireBox {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
    pub score: f64,
}

impl From<&BBox> for WireBox {
    fn from(b: &BBox) -> Self {
        Self {
            x1: b.x_min,
            y1: b.y_min,
            x2: b.x_max,
            y2: b.y_max,
            score: b.score.unwrap_or(1.0),
        }
    }
}

impl WireBox {
    pub fn to_bbox(&self) -> Result<BBox, BackendError> {
        let b = BBox::scored(self.x1, self.y1, self.x2, self.y2, self.score);
        b.validate()
            .map_err(|e| BackendError::Schema(format!("box {self:?}: {e}")))?;
        Ok(b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundRequest {
    pub version: String,
    pub prompts: Vec<String>,
    pub image_b64: String,
    pub want_embeddings: bool,
}

impl GroundRequest {
    pub fn new(prompts: Vec<String>, image_b64: String) -> Self {
        Self {
            version: v1(),
            prompts,
            image_b64,
            want_embeddings: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundResponse {
    pub version: String,
    pub boxes: Vec<WireBox>,
    pub box_embeddings: Vec<Vec<f64>>,
    pub prompt_embedding: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VqaRequest {
    pub version: String,
    pub image_b64: String,
    pub question: String,
}

impl VqaRequest {
    pub fn new(image_b64: String, question: String) -> Self {
        Self {
            version: v1(),
            image_b64,
            question,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VqaResponse {
    pub version: String,
    pub answer: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentRequest {
    pub version: String,
    pub query: String,
}

impl AugmentRequest {
    pub fn new(query: String) -> Self {
        Self { version: v1(), query }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentResponse {
    pub version: String,
    pub words: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainRequestBody {
    pub version: String,
    pub dataset_uri: String,
    pub alpha: f64,
    /// `"l1_mean"` or `"l1_sum"`.
    pub kd: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainAccepted {
    pub version: String,
    pub job_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossRecord {
    pub step: usize,
    pub l_det: f64,
    pub l_kd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainStatus {
    pub version: String,
    pub state: JobState,
    pub losses: Vec<LossRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictRequest {
    pub version: String,
    pub job_id: String,
    pub image_b64: String,
}

impl PredictRequest {
    pub fn new(job_id: String, image_b64: String) -> Self {
        Self {
            version: v1(),
            job_id,
            image_b64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictResponse {
    pub version: String,
    pub boxes: Vec<WireBox>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorDetail {
    /// `version_mismatch`, `validation`, `not_found` or `internal`.
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorBody {
    pub version: String,
    pub error: ErrorDetail,
}

impl ErrorBody {
    pub fn new(kind: &str, message: impl Into<String>) -> Self {
        Self {
            version: v1(),
            error: ErrorDetail {
                kind: kind.into(),
                message: message.into(),
            },
        }
    }
}

pub fn check_version(version: &str) -> Result<(), BackendError> {
    if version != PROTOCOL_VERSION {
        return Err(BackendError::VersionMismatch {
            expected: PROTOCOL_VERSION.into(),
            got: version.into(),
        });
    }
    Ok(())
}

fn finite(values: &[f64], what: &str) -> Result<(), BackendError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(BackendError::Schema(format!("{what} contains a non-finite number")))
    }
}

fn embedding(values: &[f64], what: &str) -> Result<EmbeddingVector, BackendError> {
    finite(values, what)?;
    EmbeddingVector::new(values.to_vec()).map_err(|e| BackendError::Schema(format!("{what}: {e}")))
}

impl GroundResponse {
    /// Checks the frozen v1 invariants and converts to domain types.
    pub fn into_grounding(self) -> Result<super::Grounding, BackendError> {
        check_version(&self.version)?;
        if self.box_embeddings.len() != self.boxes.len() {
            return Err(BackendError::Schema(format!(
                "{} boxes but {} box embeddings",
                self.boxes.len(),
                self.box_embeddings.len()
            )));
        }
        let prompt_embedding = embedding(&self.prompt_embedding, "prompt_embedding")?;
        let boxes = self.boxes.iter().map(WireBox::to_bbox).collect::<Result<Vec<_>, _>>()?;
        let box_embeddings = self
            .box_embeddings
            .iter()
            .map(|e| {
                let v = embedding(e, "box_embeddings")?;
                if v.dim() != prompt_embedding.dim() {
                    return Err(BackendError::Schema(format!(
                        "box embedding dim {} differs from prompt dim {}",
                        v.dim(),
                        prompt_embedding.dim()
                    )));
                }
                Ok(v)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(super::Grounding {
            boxes,
            box_embeddings,
            prompt_embedding,
        })
    }

    pub fn from_grounding(g: &super::Grounding) -> Self {
        Self {
            version: v1(),
            boxes: g.boxes.iter().map(WireBox::from).collect(),
            box_embeddings: g.box_embeddings.iter().map(|e| e.values().to_vec()).collect(),
            prompt_embedding: g.prompt_embedding.values().to_vec(),
        }
    }
}

impl TrainStatus {
    pub fn validate(&self) -> Result<(), BackendError> {
        check_version(&self.version)?;
        for l in &self.losses {
            finite(&[l.l_det, l.l_kd], "losses")?;
            if l.l_det < 0.0 || l.l_kd < 0.0 {
                return Err(BackendError::Schema(format!("negative loss at step {}", l.step)));
            }
        }
        Ok(())
    }
}

pub fn boxes_from_wire(boxes: &[WireBox]) -> Result<Vec<BBox>, BackendError> {
    boxes.iter().map(WireBox::to_bbox).collect()
}

pub fn encode_image(image: &RgbImage) -> String {
    let mut bytes = Vec::new();
    image
        .write_to(&mut Cursor::new(&mut bytes), ImageFormat::Png)
        .expect("PNG encoding to memory cannot fail");
    STANDARD.encode(bytes)
}

pub fn decode_image(b64: &str) -> Result<RgbImage, BackendError> {
    let bytes = STANDARD
        .decode(b64)
        .map_err(|e| BackendError::Schema(format!("image_b64: {e}")))?;
    let img = image::load_from_memory_with_format(&bytes, ImageFormat::Png)
        .map_err(|e| BackendError::Schema(format!("image_b64: {e}")))?;
    Ok(img.to_rgb8())
}
