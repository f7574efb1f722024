use attrikit::labels::{load_coco, load_coco_results};
use attrikit::EvalReport;

use super::{out_dir, write_json};
use crate::args::EvalArgs;
use crate::config::RunConfig;
use crate::error::{config, CliResult};
use crate::report;

pub const METRICS_FILE: &str = "metrics.json";

pub fn run(cfg: &RunConfig, args: &EvalArgs) -> CliResult<()> {
    let truth_path = cfg.truth_path()?.ok_or_else(|| config("eval needs --truth"))?;
    if !args.preds.is_file() {
        return Err(config(format!("predictions {} do not exist", args.preds.display())));
    }
    let truth = load_coco(&truth_path)?;
    let mut preds = load_coco_results(&args.preds, &truth)?;
    // plain annotation files carry no confidences; score them as certain
    for img in &mut preds.images {
        for b in &mut img.boxes {
            b.score.get_or_insert(1.0);
        }
    }
    let report = EvalReport::compute(&preds, &truth, cfg.skd.max_dets)?;
    write_json(&out_dir(cfg)?.join(METRICS_FILE), &report)?;
    print!("{}", report::metrics_table(&report));
    Ok(())
}
