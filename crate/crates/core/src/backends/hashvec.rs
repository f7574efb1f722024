use sha2::{Digest, Sha256};

use crate::embedding::EmbeddingVector;

/// Dimension of every mock embedding.
pub const EMBEDDING_DIM: usize = 16;

/// Unit vector derived from SHA-256 of `"attrikit:" + tag`.
///
/// The 32 digest bytes are read as 16 big-endian `u16`s, mapped affinely onto
/// [-1, 1] and normalized.
pub fn hash_unit_vector(tag: &str) -> EmbeddingVector {
    let digest = Sha256::digest(format!("attrikit:{tag}").as_bytes());
    let raw: Vec<f64> = digest
        .chunks_exact(2)
        .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 / 32767.5 - 1.0)
        .collect();
    debug_assert_eq!(raw.len(), EMBEDDING_DIM);
    let v = EmbeddingVector::new(raw).expect("digest values are finite");
    // an all-midpoint digest is the only way to get a zero vector
    v.normalized().unwrap_or(v)
}
