//! Self-trained knowledge distillation: each round trains a fresh student
//! on the previous round's pseudo labels under `l_det + alpha * l_kd` and
//! relabels the training images with it.

mod loss;
mod schedule;
mod store;

pub use loss::{composite_loss, kd_loss, kd_loss_with, FeaturePair, KdReduction};
pub use schedule::{
    reduce_kd, resume, run_round, run_schedule, seed_record, RoundRecord, SkdConfig, StepLoss, StopRule, TrainReport,
};
pub use store::{RoundStore, METRICS_FILE, PSEUDO_LABELS_FILE, ROUND_FILE, TRAIN_REPORT_FILE};
