use std::fs;

use attrikit::labels::save_coco;
use attrikit::pipeline::zero_shot_labels;
use attrikit::{Error, EvalReport, PromptSequence};
use rayon::prelude::*;

use super::prompt::SEQUENCE_FILE;
use super::{input_file, out_dir, write_json, Workspace};
use crate::args::DetectArgs;
use crate::config::RunConfig;
use crate::error::CliResult;
use crate::overlay;
use crate::report;

pub const LABELS_FILE: &str = "pseudo_labels.json";
pub const METRICS_FILE: &str = "detect_metrics.json";
pub const OVERLAY_DIR: &str = "overlays";

pub fn run(cfg: &RunConfig, args: &DetectArgs) -> CliResult<()> {
    let seq_path = input_file(args.prompts.as_ref(), cfg, SEQUENCE_FILE, "prompt sequence")?;
    let ws = Workspace::load(cfg)?;
    let text = fs::read_to_string(&seq_path).map_err(|e| Error::Io {
        path: seq_path.clone(),
        source: e,
    })?;
    let sequence: PromptSequence = serde_json::from_str(&text).map_err(|e| Error::Parse {
        record: seq_path.display().to_string(),
        message: e.to_string(),
    })?;
    let prompts = sequence.prompts();
    let backends = crate::backend::Backends::from_config(cfg);

    let labels = zero_shot_labels(
        &prompts,
        &ws.reference,
        &ws.images,
        backends.detector(),
        cfg.skd.score_threshold,
        cfg.skd.cap,
    )?;
    let out = out_dir(cfg)?;
    let path = out.join(LABELS_FILE);
    save_coco(&labels.dataset, &path)?;
    eprintln!(
        "wrote {} ({} boxes over {} images)",
        path.display(),
        labels.box_count(),
        labels.images().len()
    );

    let truth = ws.truth_subset();
    if let Some(t) = &truth {
        let report = EvalReport::compute(&labels.dataset, t, cfg.skd.max_dets)?;
        write_json(&out.join(METRICS_FILE), &report)?;
        print!("{}", report::metrics_table(&report));
    }
    if args.overlays {
        let dir = out.join(OVERLAY_DIR);
        fs::create_dir_all(&dir).map_err(|e| Error::Io {
            path: dir.clone(),
            source: e,
        })?;
        ws.images.par_iter().zip(labels.images()).try_for_each(|(img, pred)| {
            let truths = truth
                .as_ref()
                .and_then(|t| t.get(img.image_id))
                .map(|t| t.boxes.as_slice());
            let path = dir.join(format!("{:06}.png", img.image_id));
            overlay::render(&img.raster, &pred.boxes, truths)
                .save(&path)
                .map_err(|e| Error::Image {
                    path,
                    message: e.to_string(),
                })
        })?;
        eprintln!("wrote {} overlays to {}", ws.images.len(), dir.display());
    }
    Ok(())
}
