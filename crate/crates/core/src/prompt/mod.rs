//! Attribute-driven prompt construction: generate shape and color words from
//! coarse detections, expand them with synonyms and degrees, render
//! `[shape] [color] [noun].` prompts and rank them by image-text relevance.

mod augment;
mod generate;
mod relevance;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use augment::{augment_lexicon, degree_augment, degree_query, synonym_augment, synonym_query};
pub use generate::{color_question, generate_attributes, normalize_answer, shape_question, DEFAULT_TOP_K};
pub use relevance::{build_prompt_sequence, mean_relevance, PromptSequence, RelevanceReport, DEFAULT_TOP_N};

pub const DEFAULT_NOUN: &str = "nuclei";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeKind {
    Shape,
    Color,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeOrigin {
    Generated,
    SynonymAug,
    DegreeAug,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeWord {
    pub text: String,
    pub kind: AttributeKind,
    pub origin: AttributeOrigin,
}

impl AttributeWord {
    pub fn new(text: &str, kind: AttributeKind, origin: AttributeOrigin) -> Result<Self> {
        let text = text.trim().to_lowercase();
        if text.is_empty() {
            return Err(Error::Validation("attribute word must not be empty".into()));
        }
        Ok(Self { text, kind, origin })
    }

    pub fn shape(text: &str) -> Result<Self> {
        Self::new(text, AttributeKind::Shape, AttributeOrigin::Generated)
    }

    pub fn color(text: &str) -> Result<Self> {
        Self::new(text, AttributeKind::Color, AttributeOrigin::Generated)
    }
}

/// Shape and color vocabularies plus the object nouns they qualify.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeLexicon {
    pub shapes: Vec<AttributeWord>,
    pub colors: Vec<AttributeWord>,
    pub nouns: Vec<String>,
}

impl Default for AttributeLexicon {
    fn default() -> Self {
        Self {
            shapes: Vec::new(),
            colors: Vec::new(),
            nouns: vec![DEFAULT_NOUN.to_string()],
        }
    }
}

impl AttributeLexicon {
    pub fn with_nouns(nouns: &[String]) -> Result<Self> {
        let lex = Self {
            nouns: nouns.to_vec(),
            ..Self::default()
        };
        lex.validate()?;
        Ok(lex)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nouns.is_empty() || self.nouns.iter().any(|n| n.trim().is_empty()) {
            return Err(Error::Validation("lexicon needs at least one non-empty noun".into()));
        }
        for (kind, words) in [
            (AttributeKind::Shape, &self.shapes),
            (AttributeKind::Color, &self.colors),
        ] {
            for (i, w) in words.iter().enumerate() {
                if w.kind != kind {
                    return Err(Error::Validation(format!(
                        "{:?} word {:?} filed under {kind:?}",
                        w.kind, w.text
                    )));
                }
                if words[..i].iter().any(|o| o.text == w.text) {
                    return Err(Error::Validation(format!("duplicate {kind:?} word {:?}", w.text)));
                }
            }
        }
        Ok(())
    }

    pub fn words(&self, kind: AttributeKind) -> &[AttributeWord] {
        match kind {
            AttributeKind::Shape => &self.shapes,
            AttributeKind::Color => &self.colors,
        }
    }

    /// Appends `word` unless its text is already present for that kind.
    /// Returns whether it was added.
    pub fn insert(&mut self, word: AttributeWord) -> bool {
        let list = match word.kind {
            AttributeKind::Shape => &mut self.shapes,
            AttributeKind::Color => &mut self.colors,
        };
        if list.iter().any(|w| w.text == word.text) {
            return false;
        }
        list.push(word);
        true
    }
}

/// A rendered detection prompt and the parts it was built from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub shape: Option<AttributeWord>,
    pub color: Option<AttributeWord>,
    pub noun: String,
    pub rendered: String,
}

/// Renders `[shape] [color] [noun].` with single spaces. The first letter is
/// capitalized only when the noun stands alone ("Nuclei.").
pub fn assemble_prompt(shape: Option<&AttributeWord>, color: Option<&AttributeWord>, noun: &str) -> Result<Prompt> {
    let noun = noun.trim();
    if noun.is_empty() {
        return Err(Error::Validation("prompt noun must not be empty".into()));
    }
    let parts: Vec<&str> = [
        shape.map(|w| w.text.as_str()),
        color.map(|w| w.text.as_str()),
        Some(noun),
    ]
    .into_iter()
    .flatten()
    .collect();
    let mut rendered = parts.join(" ");
    if shape.is_none() && color.is_none() {
        let mut chars = rendered.chars();
        rendered = match chars.next() {
            Some(c) => c.to_uppercase().chain(chars).collect(),
            None => rendered,
        };
    }
    rendered.push('.');
    Ok(Prompt {
        shape: shape.cloned(),
        color: color.cloned(),
        noun: noun.to_string(),
        rendered,
    })
}

/// Which attribute slots candidate prompts fill.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationMode {
    #[default]
    Full,
    ShapeOnly,
    ColorOnly,
    NounOnly,
}

impl std::str::FromStr for AblationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(AblationMode::Full),
            "shape_only" => Ok(AblationMode::ShapeOnly),
            "color_only" => Ok(AblationMode::ColorOnly),
            "noun_only" => Ok(AblationMode::NounOnly),
            other => Err(Error::Validation(format!("unknown ablation mode {other:?}"))),
        }
    }
}

/// Candidate prompts for a lexicon: the shape × color × noun cross product
/// in `Full` mode, or the single-slot variants for ablations.
pub fn candidate_prompts(lexicon: &AttributeLexicon, mode: AblationMode) -> Result<Vec<Prompt>> {
    lexicon.validate()?;
    let shapes: Vec<Option<&AttributeWord>> = match mode {
        AblationMode::Full | AblationMode::ShapeOnly => lexicon.shapes.iter().map(Some).collect(),
        _ => vec![None],
    };
    let colors: Vec<Option<&AttributeWord>> = match mode {
        AblationMode::Full | AblationMode::ColorOnly => lexicon.colors.iter().map(Some).collect(),
        _ => vec![None],
    };
    let mut out = Vec::with_capacity(shapes.len() * colors.len() * lexicon.nouns.len());
    for s in &shapes {
        for c in &colors {
            for n in &lexicon.nouns {
                out.push(assemble_prompt(*s, *c, n)?);
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Validation(format!(
            "lexicon has {} shapes and {} colors; {mode:?} prompts need at least one of each used slot",
            lexicon.shapes.len(),
            lexicon.colors.len()
        )));
    }
    Ok(out)
}
