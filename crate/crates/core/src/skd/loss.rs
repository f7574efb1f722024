use serde::{Deserialize, Serialize};

use crate::embedding::{check_dims, EmbeddingVector};
use crate::error::Result;

/// Teacher (grounding image encoder) and student backbone features for the
/// same image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturePair {
    teacher: EmbeddingVector,
    student: EmbeddingVector,
}

impl FeaturePair {
    pub fn new(teacher: EmbeddingVector, student: EmbeddingVector) -> Result<Self> {
        check_dims(&teacher, &student)?;
        Ok(Self { teacher, student })
    }

    pub fn teacher(&self) -> &EmbeddingVector {
        &self.teacher
    }

    pub fn student(&self) -> &EmbeddingVector {
        &self.student
    }
}

/// How the elementwise L1 distance is reduced to a scalar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KdReduction {
    #[default]
    Mean,
    Sum,
}

impl KdReduction {
    /// Wire name used in `/v1/train` requests.
    pub fn wire_name(self) -> &'static str {
        match self {
            KdReduction::Mean => "l1_mean",
            KdReduction::Sum => "l1_sum",
        }
    }

    pub fn from_wire(name: &str) -> Option<Self> {
        match name {
            "l1_mean" => Some(KdReduction::Mean),
            "l1_sum" => Some(KdReduction::Sum),
            _ => None,
        }
    }
}

/// L1 distance between teacher and student features.
pub fn kd_loss_with(pair: &FeaturePair, reduction: KdReduction) -> f64 {
    let sum: f64 = pair
        .teacher
        .values()
        .iter()
        .zip(pair.student.values())
        .map(|(t, s)| (t - s).abs())
        .sum();
    match reduction {
        KdReduction::Mean => sum / pair.teacher.dim() as f64,
        KdReduction::Sum => sum,
    }
}

/// Mean absolute elementwise difference.
pub fn kd_loss(pair: &FeaturePair) -> f64 {
    kd_loss_with(pair, KdReduction::Mean)
}

/// Student objective: detection loss plus `alpha`-weighted distillation.
pub fn composite_loss(l_det: f64, l_kd: f64, alpha: f64) -> f64 {
    l_det + alpha * l_kd
}
