use attrikit::prompt::{augment_lexicon, build_prompt_sequence, generate_attributes, AttributeLexicon, AttributeWord};

use super::{out_dir, write_json, write_text, Workspace};
use crate::backend::Backends;
use crate::config::{LexiconOverride, RunConfig};
use crate::error::{config, CliResult};

pub const LEXICON_FILE: &str = "lexicon.json";
pub const SEQUENCE_FILE: &str = "prompt_sequence.json";
pub const TABLE_FILE: &str = "relevance.txt";

fn lexicon_from(o: &LexiconOverride, nouns: &[String]) -> CliResult<AttributeLexicon> {
    let mut lex = AttributeLexicon::with_nouns(nouns).map_err(|e| config(e.to_string()))?;
    for s in &o.shapes {
        lex.insert(AttributeWord::shape(s).map_err(|e| config(e.to_string()))?);
    }
    for c in &o.colors {
        lex.insert(AttributeWord::color(c).map_err(|e| config(e.to_string()))?);
    }
    Ok(lex)
}

pub fn run(cfg: &RunConfig) -> CliResult<()> {
    let overridden = cfg.lexicon.as_ref().map(|o| lexicon_from(o, &cfg.nouns)).transpose()?;
    let ws = Workspace::load(cfg)?;
    let backends = Backends::from_config(cfg);

    let lexicon = match overridden {
        Some(l) => l,
        None => generate_attributes(&ws.images, &cfg.nouns, backends.detector(), backends.vqa(), cfg.top_k)?,
    };
    let lexicon = if cfg.augment {
        augment_lexicon(&lexicon, backends.language())?
    } else {
        lexicon
    };
    let sequence = build_prompt_sequence(&lexicon, &ws.images, backends.detector(), cfg.top_n, cfg.ablation)?;

    let out = out_dir(cfg)?;
    write_json(&out.join(LEXICON_FILE), &lexicon)?;
    write_json(&out.join(SEQUENCE_FILE), &sequence)?;
    let table = sequence.table();
    write_text(&out.join(TABLE_FILE), &table)?;
    print!("{table}");
    Ok(())
}
