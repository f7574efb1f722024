use std::collections::BTreeMap;

use image::RgbImage;
use rayon::prelude::*;

use super::{assemble_prompt, AttributeKind, AttributeLexicon, AttributeOrigin, AttributeWord};
use crate::backends::{CaptionVqaBackend, GroundedDetectorBackend, TrainingImage};
use crate::error::{Error, Result};
use crate::geometry::{clip_and_crop_rect, BBox};

/// Words kept per kind.
pub const DEFAULT_TOP_K: usize = 3;

/// An answer must come from at least this share of patches to count as an
/// attribute; isolated answers are VQA noise (a patch cut through an object,
/// a stray neighbor).
pub const MIN_SUPPORT_SHARE: f64 = 0.1;

const MAX_ANSWER_TOKENS: usize = 3;

const STOPWORDS: &[&str] = &[
    "a", "an", "the", "is", "are", "it", "its", "they", "their", "this", "these", "that", "those", "of", "and", "or",
    "with", "in", "color", "colour", "colored", "shape", "shaped", "looks", "appears", "very",
];

pub fn color_question(noun: &str) -> String {
    format!("what is the color of the {noun}")
}

pub fn shape_question(noun: &str) -> String {
    format!("what is the shape of the {noun}")
}

/// Canonical attribute phrase of a free-text answer: lowercase, punctuation
/// and filler removed, first contiguous run of content words (at most three).
/// `None` when nothing remains.
pub fn normalize_answer(answer: &str, nouns: &[String]) -> Option<String> {
    let lowered = answer.to_lowercase();
    let tokens = lowered
        .split(|c: char| !(c.is_alphanumeric() || c == '-'))
        .map(|t| t.trim_matches('-'))
        .filter(|t| !t.is_empty());
    let noun_words: Vec<&str> = nouns.iter().flat_map(|n| n.split_whitespace()).collect();
    let is_filler = |t: &str| STOPWORDS.contains(&t) || noun_words.iter().any(|n| n.eq_ignore_ascii_case(t));

    let mut run: Vec<&str> = Vec::new();
    for t in tokens {
        if is_filler(t) {
            if run.is_empty() {
                continue;
            }
            break;
        }
        run.push(t);
        if run.len() == MAX_ANSWER_TOKENS {
            break;
        }
    }
    (!run.is_empty()).then(|| run.join(" "))
}

/// Integer pixel patch covering `b`, at least one pixel each way.
fn patch(raster: &RgbImage, b: &BBox) -> RgbImage {
    let (w, h) = (raster.width(), raster.height());
    let x0 = (b.x_min.floor().max(0.0) as u32).min(w - 1);
    let y0 = (b.y_min.floor().max(0.0) as u32).min(h - 1);
    let x1 = (b.x_max.ceil() as u32).clamp(x0 + 1, w);
    let y1 = (b.y_max.ceil() as u32).clamp(y0 + 1, h);
    image::imageops::crop_imm(raster, x0, y0, x1 - x0, y1 - y0).to_image()
}

struct ImageTally {
    patches: usize,
    colors: Vec<String>,
    shapes: Vec<String>,
}

fn tally_image(
    img: &TrainingImage,
    coarse: &[String],
    nouns: &[String],
    detector: &dyn GroundedDetectorBackend,
    vqa: &dyn CaptionVqaBackend,
) -> Result<ImageTally> {
    let backend = |e| Error::backend(Some(img.image_id), e);
    let grounding = detector.ground(coarse, img).map_err(backend)?;
    let (cq, sq) = (color_question(&nouns[0]), shape_question(&nouns[0]));
    let mut out = ImageTally {
        patches: 0,
        colors: Vec::new(),
        shapes: Vec::new(),
    };
    for b in &grounding.boxes {
        let Ok(clipped) = clip_and_crop_rect(b, img.size()) else {
            continue;
        };
        let p = patch(&img.raster, &clipped);
        out.patches += 1;
        out.colors
            .extend(normalize_answer(&vqa.answer(&p, &cq).map_err(backend)?, nouns));
        out.shapes
            .extend(normalize_answer(&vqa.answer(&p, &sq).map_err(backend)?, nouns));
    }
    Ok(out)
}

fn top_words(
    counts: &BTreeMap<String, usize>,
    patches: usize,
    top_k: usize,
    kind: AttributeKind,
) -> Result<Vec<AttributeWord>> {
    let mut ranked: Vec<(&String, &usize)> = counts
        .iter()
        .filter(|(_, &n)| n as f64 >= MIN_SUPPORT_SHARE * patches as f64)
        .collect();
    // most frequent first; BTreeMap order already breaks ties alphabetically
    ranked.sort_by(|a, b| b.1.cmp(a.1));
    ranked
        .into_iter()
        .take(top_k)
        .map(|(w, _)| AttributeWord::new(w, kind, AttributeOrigin::Generated))
        .collect()
}

/// Coarse-detects every image with noun-only prompts, asks the VQA backend
/// for the color and shape of each detected patch and keeps the `top_k`
/// most frequent answers per kind.
pub fn generate_attributes(
    images: &[TrainingImage],
    nouns: &[String],
    detector: &dyn GroundedDetectorBackend,
    vqa: &dyn CaptionVqaBackend,
    top_k: usize,
) -> Result<AttributeLexicon> {
    let mut lexicon = AttributeLexicon::with_nouns(nouns)?;
    if images.is_empty() {
        return Err(Error::Validation(
            "attribute generation needs at least one image".into(),
        ));
    }
    if top_k == 0 {
        return Err(Error::Validation("top_k must be at least 1".into()));
    }
    let coarse = nouns
        .iter()
        .map(|n| assemble_prompt(None, None, n).map(|p| p.rendered))
        .collect::<Result<Vec<_>>>()?;

    let per_image = images
        .par_iter()
        .map(|img| tally_image(img, &coarse, nouns, detector, vqa))
        .collect::<Result<Vec<_>>>()?;

    let patches: usize = per_image.iter().map(|t| t.patches).sum();
    if patches == 0 {
        return Err(Error::EmptyLexicon { images: images.len() });
    }
    let mut colors = BTreeMap::new();
    let mut shapes = BTreeMap::new();
    for t in &per_image {
        for c in &t.colors {
            *colors.entry(c.clone()).or_insert(0) += 1;
        }
        for s in &t.shapes {
            *shapes.entry(s.clone()).or_insert(0) += 1;
        }
    }
    lexicon.shapes = top_words(&shapes, patches, top_k, AttributeKind::Shape)?;
    lexicon.colors = top_words(&colors, patches, top_k, AttributeKind::Color)?;
    Ok(lexicon)
}
