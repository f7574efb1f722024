use std::collections::BTreeMap;

use super::LanguageBackend;
use crate::error::BackendError;

const SYNONYM_PREFIX: &str = "give the synonyms of ";
const DEGREE_PREFIX: &str = "give the words describing different degrees of ";

/// Fixed-dictionary language model for the two augmentation queries.
#[derive(Debug, Clone)]
pub struct MockLanguageModel {
    synonyms: BTreeMap<String, Vec<String>>,
    degrees: BTreeMap<String, Vec<String>>,
}

fn table(entries: &[(&str, &[&str])]) -> BTreeMap<String, Vec<String>> {
    entries
        .iter()
        .map(|(k, v)| (k.to_string(), v.iter().map(|s| s.to_string()).collect()))
        .collect()
}

impl Default for MockLanguageModel {
    fn default() -> Self {
        Self {
            synonyms: table(&[
                ("purple", &["violet", "plum-colored", "purple-blue"]),
                ("round", &["circular", "elliptical"]),
            ]),
            degrees: table(&[
                ("purple", &["dark purple", "rich purple", "vibrant purple"]),
                ("round", &["slightly round", "moderately round", "mostly round"]),
            ]),
        }
    }
}

impl MockLanguageModel {
    pub fn with_synonyms(mut self, word: &str, words: &[&str]) -> Self {
        self.synonyms
            .insert(word.to_lowercase(), words.iter().map(|s| s.to_string()).collect());
        self
    }

    pub fn with_degrees(mut self, word: &str, words: &[&str]) -> Self {
        self.degrees
            .insert(word.to_lowercase(), words.iter().map(|s| s.to_string()).collect());
        self
    }
}

fn subject(rest: &str) -> String {
    rest.split(',')
        .next()
        .unwrap_or("")
        .trim()
        .trim_end_matches(['.', '?', '!'])
        .trim()
        .to_string()
}

impl LanguageBackend for MockLanguageModel {
    fn word_list(&self, query: &str) -> Result<Vec<String>, BackendError> {
        let q = query.trim().to_lowercase();
        let (dict, word) = if let Some(rest) = q.strip_prefix(SYNONYM_PREFIX) {
            (&self.synonyms, subject(rest))
        } else if let Some(rest) = q.strip_prefix(DEGREE_PREFIX) {
            (&self.degrees, subject(rest))
        } else {
            return Ok(Vec::new());
        };
        Ok(dict.get(&word).cloned().unwrap_or_default())
    }
}
