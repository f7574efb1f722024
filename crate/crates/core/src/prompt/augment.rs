use super::{AttributeLexicon, AttributeOrigin, AttributeWord};
use crate::backends::LanguageBackend;
use crate::error::{Error, Result};

pub fn synonym_query(word: &str) -> String {
    format!("give the synonyms of {word}, which can be used to describe the nuclei in a H&E stained pathological image")
}

pub fn degree_query(word: &str) -> String {
    format!("give the words describing different degrees of {word}")
}

fn clean(raw: &str) -> String {
    raw.trim()
        .trim_start_matches(|c: char| c.is_ascii_digit() || matches!(c, '-' | '*' | '.' | ')' | ' '))
        .trim_matches(|c: char| c.is_ascii_punctuation() && c != '-')
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

fn expand(
    word: &AttributeWord,
    lm: &dyn LanguageBackend,
    query: String,
    origin: AttributeOrigin,
) -> Result<Vec<AttributeWord>> {
    let raw = lm.word_list(&query).map_err(|e| Error::backend(None, e))?;
    let mut out: Vec<AttributeWord> = Vec::new();
    for r in raw {
        let text = clean(&r);
        if text.is_empty() || text == word.text || out.iter().any(|w| w.text == text) {
            continue;
        }
        out.push(AttributeWord::new(&text, word.kind, origin)?);
    }
    Ok(out)
}

/// Synonyms of `word`, cleaned and deduplicated; never includes `word`.
pub fn synonym_augment(word: &AttributeWord, lm: &dyn LanguageBackend) -> Result<Vec<AttributeWord>> {
    expand(word, lm, synonym_query(&word.text), AttributeOrigin::SynonymAug)
}

/// Graded variants of `word` such as "slightly round".
pub fn degree_augment(word: &AttributeWord, lm: &dyn LanguageBackend) -> Result<Vec<AttributeWord>> {
    expand(word, lm, degree_query(&word.text), AttributeOrigin::DegreeAug)
}

/// Expands every generated word with its synonyms, then its degrees. Seed
/// words stay in place and duplicates within a kind are dropped.
pub fn augment_lexicon(lexicon: &AttributeLexicon, lm: &dyn LanguageBackend) -> Result<AttributeLexicon> {
    let mut out = lexicon.clone();
    let seeds: Vec<AttributeWord> = lexicon
        .shapes
        .iter()
        .chain(&lexicon.colors)
        .filter(|w| w.origin == AttributeOrigin::Generated)
        .cloned()
        .collect();
    for seed in &seeds {
        for w in synonym_augment(seed, lm)?.into_iter().chain(degree_augment(seed, lm)?) {
            out.insert(w);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::MockLanguageModel;
    use crate::error::BackendError;
    use crate::prompt::AttributeKind;

    fn texts(words: &[AttributeWord]) -> Vec<&str> {
        words.iter().map(|w| w.text.as_str()).collect()
    }

    #[test]
    fn mock_dictionary_expansions() {
        let lm = MockLanguageModel::default();
        let purple = AttributeWord::color("purple").unwrap();
        let round = AttributeWord::shape("round").unwrap();
        assert!(texts(&synonym_augment(&purple, &lm).unwrap()).contains(&"violet"));
        assert!(texts(&synonym_augment(&round, &lm).unwrap()).contains(&"circular"));
        let deg = degree_augment(&round, &lm).unwrap();
        assert!(texts(&deg).contains(&"slightly round"));
        assert!(texts(&deg).contains(&"moderately round"));
        assert!(deg
            .iter()
            .all(|w| w.origin == AttributeOrigin::DegreeAug && w.kind == AttributeKind::Shape));
        assert!(texts(&degree_augment(&purple, &lm).unwrap()).contains(&"dark purple"));
        let unknown = AttributeWord::color("teal").unwrap();
        assert!(synonym_augment(&unknown, &lm).unwrap().is_empty());
    }

    #[test]
    fn cleaning_drops_seed_duplicates_and_noise() {
        let lm =
            MockLanguageModel::default().with_synonyms("round", &["1. Circular", "round", "circular.", "  ", "Oval!"]);
        let round = AttributeWord::shape("round").unwrap();
        assert_eq!(texts(&synonym_augment(&round, &lm).unwrap()), vec!["circular", "oval"]);
    }

    #[test]
    fn lexicon_keeps_seeds_and_set_semantics() {
        let lm = MockLanguageModel::default().with_degrees("purple", &["dark purple", "violet", "purple"]);
        let mut lex = AttributeLexicon::default();
        lex.insert(AttributeWord::shape("round").unwrap());
        lex.insert(AttributeWord::color("purple").unwrap());
        let out = augment_lexicon(&lex, &lm).unwrap();
        assert_eq!(out.shapes[0].text, "round");
        assert_eq!(out.colors[0].text, "purple");
        assert_eq!(
            texts(&out.colors),
            vec!["purple", "violet", "plum-colored", "purple-blue", "dark purple"]
        );
        out.validate().unwrap();
        // augmenting again expands only the seeds, so nothing new appears
        assert_eq!(augment_lexicon(&out, &lm).unwrap(), out);
    }

    struct Down;

    impl LanguageBackend for Down {
        fn word_list(&self, _: &str) -> Result<Vec<String>, BackendError> {
            Err(BackendError::Transport("connection refused".into()))
        }
    }

    #[test]
    fn backend_failure_surfaces() {
        let err = synonym_augment(&AttributeWord::color("purple").unwrap(), &Down).unwrap_err();
        assert!(matches!(err.backend_cause(), Some(BackendError::Transport(_))));
    }
}
