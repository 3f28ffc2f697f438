//! Per-round run logs and the evaluation metrics computed from them.

mod error;
mod log;
mod ops;
mod report;

pub use error::{MetricsError, Result};
pub use log::{mean_var, RoundRecord, RunLog};
pub use ops::{
    best_top1, common_target, improvements, loss_stats_normalized, mean_timing_ms,
    relative_improvement, rounds_to_target, smooth, tail_loss_variance, LossRatio,
};
pub use report::{
    accuracy_curves_csv, loss_ratio_csv, runs_csv, summary_table, timing_table_csv, RunSummary,
    CANDIDATE,
};
