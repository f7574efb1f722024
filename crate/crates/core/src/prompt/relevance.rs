use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{candidate_prompts, AblationMode, AttributeLexicon, Prompt};
use crate::backends::{GroundedDetectorBackend, TrainingImage};
use crate::embedding::cosine;
use crate::error::{Error, Result};

/// Prompts kept in a sequence unless configured otherwise.
pub const DEFAULT_TOP_N: usize = 9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevanceReport {
    pub prompt: Prompt,
    /// Mean over images of the mean box-to-prompt cosine similarity.
    pub relevance: f64,
    /// Images that contributed at least one candidate box.
    pub n_images: usize,
    /// Images left out because the detector returned no boxes.
    pub skipped_images: usize,
}

/// Prompts ranked by relevance, most relevant first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptSequence {
    pub entries: Vec<RelevanceReport>,
    pub n_selected: usize,
    /// Candidates that produced no boxes on any image.
    #[serde(default)]
    pub unscored: Vec<String>,
}

impl PromptSequence {
    pub fn prompts(&self) -> Vec<String> {
        self.entries.iter().map(|r| r.prompt.rendered.clone()).collect()
    }

    /// The ranked prompts as one detector caption, separated by single spaces.
    pub fn concatenated(&self) -> String {
        self.prompts().join(" ")
    }

    /// Fixed-width relevance table, one prompt per row.
    pub fn table(&self) -> String {
        let width = self
            .entries
            .iter()
            .map(|r| r.prompt.rendered.len())
            .max()
            .unwrap_or(6)
            .max(6);
        let mut out = format!(
            "{:>4}  {:<width$}  {:>9}  {:>6}\n",
            "rank", "prompt", "relevance", "images"
        );
        for (i, r) in self.entries.iter().enumerate() {
            out.push_str(&format!(
                "{:>4}  {:<width$}  {:>9.3}  {:>6}\n",
                i + 1,
                r.prompt.rendered,
                r.relevance,
                r.n_images
            ));
        }
        out
    }
}

fn image_relevance(
    prompt: &[String],
    img: &TrainingImage,
    detector: &dyn GroundedDetectorBackend,
) -> Result<Option<f64>> {
    let g = detector
        .ground(prompt, img)
        .map_err(|e| Error::backend(Some(img.image_id), e))?;
    if g.boxes.is_empty() {
        return Ok(None);
    }
    if g.box_embeddings.len() != g.boxes.len() {
        return Err(Error::Validation(format!(
            "image {}: {} boxes but {} embeddings",
            img.image_id,
            g.boxes.len(),
            g.box_embeddings.len()
        )));
    }
    let mut sum = 0.0;
    for r in &g.box_embeddings {
        sum += cosine(r, &g.prompt_embedding)?;
    }
    Ok(Some(sum / g.box_embeddings.len() as f64))
}

/// Mean cosine similarity between the prompt's text embedding and the
/// visual embeddings of its candidate boxes: averaged over the boxes of each
/// image, then over the images that produced boxes.
pub fn mean_relevance(
    prompt: &Prompt,
    images: &[TrainingImage],
    detector: &dyn GroundedDetectorBackend,
) -> Result<RelevanceReport> {
    if images.is_empty() {
        return Err(Error::Validation("relevance needs at least one image".into()));
    }
    let caption = [prompt.rendered.clone()];
    let per_image = images
        .par_iter()
        .map(|img| image_relevance(&caption, img, detector))
        .collect::<Result<Vec<_>>>()?;
    let scored: Vec<f64> = per_image.iter().flatten().copied().collect();
    if scored.is_empty() {
        return Err(Error::NoCandidates {
            prompt: prompt.rendered.clone(),
        });
    }
    Ok(RelevanceReport {
        prompt: prompt.clone(),
        relevance: scored.iter().sum::<f64>() / scored.len() as f64,
        n_images: scored.len(),
        skipped_images: images.len() - scored.len(),
    })
}

/// Scores every candidate prompt of the lexicon and keeps the `n` most
/// relevant. Ties are broken by the rendered text.
pub fn build_prompt_sequence(
    lexicon: &AttributeLexicon,
    images: &[TrainingImage],
    detector: &dyn GroundedDetectorBackend,
    n: usize,
    mode: AblationMode,
) -> Result<PromptSequence> {
    if n == 0 {
        return Err(Error::Validation("top-N must be at least 1".into()));
    }
    let candidates = candidate_prompts(lexicon, mode)?;
    let mut entries = Vec::with_capacity(candidates.len());
    let mut unscored = Vec::new();
    for p in &candidates {
        match mean_relevance(p, images, detector) {
            Ok(r) => entries.push(r),
            Err(Error::NoCandidates { prompt }) => unscored.push(prompt),
            Err(e) => return Err(e),
        }
    }
    if entries.is_empty() {
        return Err(Error::NoCandidates {
            prompt: candidates[0].rendered.clone(),
        });
    }
    entries.sort_by(|a, b| {
        b.relevance
            .total_cmp(&a.relevance)
            .then_with(|| a.prompt.rendered.cmp(&b.prompt.rendered))
    });
    entries.truncate(n);
    Ok(PromptSequence {
        entries,
        n_selected: n,
        unscored,
    })
}
