use crate::error::{MetricsError, Result};
use crate::log::{mean_var, RunLog};

/// Highest top-1 accuracy reached in the run.
pub fn best_top1(log: &RunLog) -> Result<f64> {
    if log.is_empty() {
        return Err(MetricsError::Empty("run log"));
    }
    Ok(log.records().iter().map(|r| r.top1).fold(f64::NEG_INFINITY, f64::max))
}

/// Means over consecutive blocks of `window` values; a trailing partial
/// block is averaged over its own length.
pub fn smooth(series: &[f64], window: usize) -> Result<Vec<f64>> {
    if window == 0 {
        return Err(MetricsError::Invalid("window must be >= 1".into()));
    }
    Ok(series
        .chunks(window)
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossRatio {
    pub round: usize,
    pub mean_ratio: f64,
    pub var_ratio: f64,
}

/// `x / y`, defined as 1 when the two are equal (covers `0 / 0`).
fn ratio(x: f64, y: f64) -> f64 {
    if x == y {
        1.0
    } else {
        x / y
    }
}

/// Per-round mean and population variance of `losses_before`, each divided
/// by the reference run's value for the same round.
pub fn loss_stats_normalized(log: &RunLog, reference: &RunLog) -> Result<Vec<LossRatio>> {
    if log.rounds() != reference.rounds() {
        return Err(MetricsError::Invalid(
            "logs must cover the same rounds".into(),
        ));
    }
    Ok(log
        .records()
        .iter()
        .zip(reference.records())
        .map(|(a, b)| {
            let (ma, va) = mean_var(&a.losses_before);
            let (mb, vb) = mean_var(&b.losses_before);
            LossRatio {
                round: a.round,
                mean_ratio: ratio(ma, mb),
                var_ratio: ratio(va, vb),
            }
        })
        .collect())
}

/// First round whose top-1 reaches `target`.
pub fn rounds_to_target(log: &RunLog, target: f64) -> Result<Option<usize>> {
    if !(target > 0.0 && target <= 1.0) {
        return Err(MetricsError::Invalid(format!("target {target} not in (0, 1]")));
    }
    Ok(log
        .records()
        .iter()
        .find(|r| r.top1 >= target)
        .map(|r| r.round))
}

/// Convergence target for a comparison: the lowest best top-1 among the runs,
/// so that every run reaches it.
pub fn common_target(logs: &[&RunLog]) -> Result<f64> {
    logs.iter()
        .map(|l| best_top1(l))
        .try_fold(f64::INFINITY, |m, b| Ok(m.min(b?)))
        .and_then(|m| {
            if m.is_finite() {
                Ok(m)
            } else {
                Err(MetricsError::Empty("no runs"))
            }
        })
}

/// Mean population variance of `losses_before` over the last `rounds` records.
pub fn tail_loss_variance(log: &RunLog, rounds: usize) -> Result<f64> {
    let recs = log.records();
    if recs.is_empty() || rounds == 0 {
        return Err(MetricsError::Empty("run log tail"));
    }
    let tail = &recs[recs.len().saturating_sub(rounds)..];
    Ok(tail.iter().map(|r| r.loss_mean_var().1).sum::<f64>() / tail.len() as f64)
}

/// Relative improvement of `value` over `baseline`, in percent.
pub fn relative_improvement(value: f64, baseline: f64) -> f64 {
    (value - baseline) / baseline * 100.0
}

/// impr.(a) and impr.(b): relative improvement over the best and the worst
/// baseline, in percent.
pub fn improvements(candidate: f64, baselines: &[f64]) -> Result<(f64, f64)> {
    if baselines.is_empty() {
        return Err(MetricsError::Empty("baselines"));
    }
    let best = baselines.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let worst = baselines.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((
        relative_improvement(candidate, best),
        relative_improvement(candidate, worst),
    ))
}

/// Mean wall-clock milliseconds of impact computation and aggregation per round.
pub fn mean_timing_ms(log: &RunLog) -> Result<(f64, f64)> {
    if log.is_empty() {
        return Err(MetricsError::Empty("run log"));
    }
    let n = log.len() as f64;
    let (i, a) = log
        .records()
        .iter()
        .fold((0.0, 0.0), |(i, a), r| (i + r.impact_secs, a + r.aggregation_secs));
    Ok((i / n * 1e3, a / n * 1e3))
}
