use serde::{Deserialize, Serialize};

use crate::error::{AgentError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    /// Discount factor.
    pub gamma: f64,
    /// Soft update factor; see `conventional_polyak`.
    pub rho: f64,
    pub pi_lr: f64,
    pub q_lr: f64,
    pub hidden: usize,
    /// Hidden layers of the policy network.
    pub pi_layers: usize,
    /// Hidden layers of the value network.
    pub q_layers: usize,
    /// σ ≤ β·|μ|.
    pub beta: f64,
    /// Stage-1 workers.
    pub workers: usize,
    pub batch_size: usize,
    /// Gradient updates after each round once the buffer holds a batch.
    pub updates_per_round: usize,
    /// Stage-2 updates on the merged buffer.
    pub offline_updates: usize,
    /// Std of the Gaussian noise on μ, decayed linearly from start to end
    /// over `noise_decay_rounds` rounds. 0 means the length of the run: the
    /// CLI and [`two_stage_train`](crate::two_stage_train) substitute
    /// `max_rounds`; left at 0 the noise stays at `noise_start`.
    pub noise_start: f64,
    pub noise_end: f64,
    pub noise_decay_rounds: usize,
    pub buffer_capacity: usize,
    /// Divide losses by the running max loss and counts by their sum.
    pub normalize_state: bool,
    /// `target ← (1−ρ)·target + ρ·main` instead of `target ← ρ·target + (1−ρ)·main`.
    pub conventional_polyak: bool,
    /// Return the negated loss-like reward so that maximizing it lowers loss.
    pub negate_reward: bool,
    pub seed: u64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            rho: 0.02,
            pi_lr: 1e-4,
            q_lr: 1e-3,
            hidden: 256,
            pi_layers: 3,
            q_layers: 2,
            beta: 0.5,
            workers: 2,
            batch_size: 64,
            updates_per_round: 10,
            offline_updates: 1000,
            noise_start: 0.1,
            noise_end: 0.01,
            noise_decay_rounds: 0,
            buffer_capacity: 100_000,
            normalize_state: true,
            conventional_polyak: false,
            negate_reward: true,
            seed: 0,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(AgentError::Config(m));
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad(format!("gamma {} not in [0, 1]", self.gamma));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return bad(format!("rho {} not in [0, 1]", self.rho));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return bad(format!("beta {} not in (0, 1]", self.beta));
        }
        if !(self.pi_lr >= 0.0 && self.q_lr >= 0.0) {
            return bad("learning rates must be nonnegative".into());
        }
        if self.hidden == 0 || self.workers == 0 || self.batch_size == 0 || self.buffer_capacity == 0 {
            return bad("hidden, workers, batch_size and buffer_capacity must be positive".into());
        }
        if self.batch_size > self.buffer_capacity {
            return bad("batch_size exceeds buffer_capacity".into());
        }
        if !(self.noise_start >= 0.0 && self.noise_end >= 0.0) {
            return bad("noise scales must be nonnegative".into());
        }
        Ok(())
    }

    /// Exploration noise for 1-based `round`.
    pub fn noise_scale(&self, round: usize) -> f64 {
        match self.noise_decay_rounds {
            0 => return self.noise_start,
            1 => return self.noise_end,
            _ => {}
        }
        let f = (round.saturating_sub(1) as f64 / (self.noise_decay_rounds - 1) as f64).min(1.0);
        self.noise_start + (self.noise_end - self.noise_start) * f
    }
}
