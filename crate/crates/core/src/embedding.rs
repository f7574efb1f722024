use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A fixed-length real feature vector (visual, text or backbone features).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Validation("embedding must have dim > 0".into()));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Validation(format!("embedding contains non-finite value {bad}")));
        }
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &EmbeddingVector) -> Result<f64> {
        check_dims(self, other)?;
        Ok(self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum())
    }

    /// Returns the vector scaled to unit length, or `None` for the zero vector.
    pub fn normalized(&self) -> Option<EmbeddingVector> {
        let n = self.norm();
        (n > 0.0).then(|| EmbeddingVector(self.0.iter().map(|v| v / n).collect()))
    }
}

impl TryFrom<Vec<f64>> for EmbeddingVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<EmbeddingVector> for Vec<f64> {
    fn from(v: EmbeddingVector) -> Self {
        v.0
    }
}

pub(crate) fn check_dims(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::Validation(format!(
            "embedding dims differ: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}

/// Cosine similarity `u·v / (‖u‖₂‖v‖₂)`, clamped to [-1, 1] against rounding.
pub fn cosine(u: &EmbeddingVector, v: &EmbeddingVector) -> Result<f64> {
    let dot = u.dot(v)?;
    let denom = u.norm() * v.norm();
    if denom == 0.0 {
        return Err(Error::UndefinedSimilarity);
    }
    Ok((dot / denom).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn ev(v: &[f64]) -> EmbeddingVector {
        EmbeddingVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn cosine_examples() {
        assert_abs_diff_eq!(cosine(&ev(&[3., 4.]), &ev(&[3., 4.])).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(cosine(&ev(&[1., 0.]), &ev(&[0., 1.])).unwrap(), 0.0);
        assert_abs_diff_eq!(
            cosine(&ev(&[1., 0.]), &ev(&[1., 1.])).unwrap(),
            std::f64::consts::FRAC_1_SQRT_2,
            epsilon = 1e-8
        );
    }

    #[test]
    fn cosine_errors() {
        assert!(matches!(
            cosine(&ev(&[0., 0.]), &ev(&[1., 1.])),
            Err(Error::UndefinedSimilarity)
        ));
        assert!(matches!(
            cosine(&ev(&[1., 0.]), &ev(&[1., 1., 1.])),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(EmbeddingVector::new(vec![]).is_err());
        assert!(EmbeddingVector::new(vec![1.0, f64::NAN]).is_err());
        assert!(serde_json::from_str::<EmbeddingVector>("[]").is_err());
    }

    proptest! {
        #[test]
        fn cosine_is_scale_invariant(v in prop::collection::vec(-10.0..10.0f64, 1..20), c in 0.01..100.0f64) {
            let u = ev(&v);
            prop_assume!(u.norm() > 1e-6);
            let scaled = ev(&v.iter().map(|x| x * c).collect::<Vec<_>>());
            prop_assert!((cosine(&u, &u).unwrap() - 1.0).abs() < 1e-12);
            prop_assert!((cosine(&u, &scaled).unwrap() - 1.0).abs() < 1e-12);
        }
    }
}
