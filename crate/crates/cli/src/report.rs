//! Plain-text tables for the terminal and for the run directory.

use attrikit::{EvalReport, LabelSource, RoundRecord};

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.3}"))
}

pub fn metrics_table(r: &EvalReport) -> String {
    let d = &r.detection;
    let mut out = format!("{:>7} {:>7} {:>7} {:>7} {:>7}\n", "mAP", "AP50", "AP75", "AR", "mIoU");
    out.push_str(&format!("{} {:>7}\n", d.table_row(), opt(r.miou_nearest)));
    out.push_str(&format!("\n{:>5} {:>7} {:>7}\n", "IoU", "AP", "recall"));
    for t in &d.per_threshold {
        out.push_str(&format!("{:>5.2} {:>7.3} {:>7.3}\n", t.threshold, t.ap, t.recall));
    }
    out.push_str(&format!("\n{} predictions, {} truths\n", d.n_pred, d.n_truth));
    out
}

pub fn rounds_table(records: &[RoundRecord]) -> String {
    let mut out = format!(
        "{:>5} {:>8} {:>6} {:>7} {:>7} {:>7} {:>7} {:>7} {:>9}\n",
        "round", "source", "boxes", "mAP", "AP50", "AP75", "AR", "mIoU", "loss"
    );
    for r in records {
        let m = r.metrics_vs_truth.as_ref();
        let source = match r.pseudo_labels.source {
            LabelSource::Teacher => "teacher",
            LabelSource::Student => "student",
        };
        let loss = r
            .train_report
            .as_ref()
            .and_then(|t| t.steps.last())
            .map_or_else(|| "-".into(), |s| format!("{:.4}", s.composite));
        out.push_str(&format!(
            "{:>5} {:>8} {:>6} {:>7} {:>7} {:>7} {:>7} {:>7} {:>9}\n",
            r.round_index,
            source,
            r.pseudo_labels.box_count(),
            opt(m.map(|m| m.detection.map)),
            opt(m.map(|m| m.detection.ap50)),
            opt(m.map(|m| m.detection.ap75)),
            opt(m.map(|m| m.detection.ar)),
            opt(m.and_then(|m| m.miou_nearest)),
            loss
        ));
    }
    out
}
