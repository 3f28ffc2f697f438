use feddrl_fl::ClientReport;

use crate::error::{AgentError, Result};

/// `[l_b…, l_a…, n…]` for the K participants of one round, in slot order.
#[derive(Clone, Debug, PartialEq)]
pub struct AggState {
    pub losses_before: Vec<f64>,
    pub losses_after: Vec<f64>,
    pub counts: Vec<f64>,
    pub round: usize,
}

impl AggState {
    pub fn k(&self) -> usize {
        self.counts.len()
    }

    /// Unnormalized flat vector of length 3K.
    pub fn flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(3 * self.k());
        v.extend_from_slice(&self.losses_before);
        v.extend_from_slice(&self.losses_after);
        v.extend_from_slice(&self.counts);
        v
    }
}

pub fn build_state(reports: &[ClientReport], round: usize, k: usize) -> Result<AggState> {
    if reports.len() != k {
        return Err(AgentError::State(format!("{} reports, expected K = {k}", reports.len())));
    }
    let state = AggState {
        losses_before: reports.iter().map(|r| r.loss_before).collect(),
        losses_after: reports.iter().map(|r| r.loss_after).collect(),
        counts: reports.iter().map(|r| r.num_samples as f64).collect(),
        round,
    };
    if !state.flat().iter().all(|v| v.is_finite()) {
        return Err(AgentError::NonFinite("state"));
    }
    Ok(state)
}

/// Scales states for the networks: losses by the largest loss seen so far,
/// counts by their sum. Disabled, it passes raw values through.
#[derive(Clone, Debug, PartialEq)]
pub struct StateNormalizer {
    pub enabled: bool,
    pub max_loss: f64,
}

impl StateNormalizer {
    pub fn new(enabled: bool) -> Self {
        Self {
            enabled,
            max_loss: 0.0,
        }
    }

    /// Updates the running max with this state's losses, then normalizes.
    pub fn normalize(&mut self, s: &AggState) -> Vec<f64> {
        if !self.enabled {
            return s.flat();
        }
        let m = s
            .losses_before
            .iter()
            .chain(&s.losses_after)
            .fold(self.max_loss, |a, &b| a.max(b));
        self.max_loss = m;
        let scale = if m > 0.0 { m } else { 1.0 };
        let total: f64 = s.counts.iter().sum();
        let total = if total > 0.0 { total } else { 1.0 };
        let mut v = Vec::with_capacity(3 * s.k());
        v.extend(s.losses_before.iter().map(|l| l / scale));
        v.extend(s.losses_after.iter().map(|l| l / scale));
        v.extend(s.counts.iter().map(|n| n / total));
        v
    }
}
