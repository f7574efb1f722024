use attrikit::labels::load_coco;
use attrikit::skd::{resume, run_schedule, RoundStore};
use attrikit::{LabelSource, PseudoLabelSet};

use super::detect::LABELS_FILE;
use super::{input_file, out_dir, write_text, Workspace};
use crate::args::DistillArgs;
use crate::backend::Backends;
use crate::config::RunConfig;
use crate::error::{config, CliResult};
use crate::report;

pub const ROUNDS_DIR: &str = "rounds";
pub const TABLE_FILE: &str = "distill.txt";

pub fn run(cfg: &RunConfig, args: &DistillArgs) -> CliResult<()> {
    let out = out_dir(cfg)?;
    let store = RoundStore::new(out.join(ROUNDS_DIR));
    let on_disk = store.rounds()?;
    if args.resume && on_disk.is_empty() {
        return Err(config(format!("nothing to resume under {}", store.root().display())));
    }
    if !args.resume && !on_disk.is_empty() {
        return Err(config(format!(
            "{} already holds rounds; pass --resume or choose another --out",
            store.root().display()
        )));
    }
    let labels_path = if args.resume {
        None
    } else {
        Some(input_file(args.labels.as_ref(), cfg, LABELS_FILE, "pseudo labels")?)
    };
    let ws = Workspace::load(cfg)?;
    let truth = ws.truth_subset();
    let backends = Backends::from_config(cfg);

    let records = match labels_path {
        None => resume(&store, &ws.images, backends.trainer(), &cfg.skd, truth.as_ref())?,
        Some(path) => {
            let seed = PseudoLabelSet::new(load_coco(&path)?, 0, LabelSource::Teacher, cfg.skd.cap)?;
            run_schedule(
                &seed,
                &ws.images,
                Some(backends.trainer()),
                &cfg.skd,
                truth.as_ref(),
                Some(&store),
            )?
        }
    };
    let table = report::rounds_table(&records);
    write_text(&out.join(TABLE_FILE), &table)?;
    print!("{table}");
    Ok(())
}
