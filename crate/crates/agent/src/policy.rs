use std::str::FromStr;

use feddrl_fl::{fedavg_impacts, stream_rng, ClientReport, FlError, ImpactPolicy, ImpactVector, Stream};
use rand_chacha::ChaCha8Rng;

use crate::action::{impacts_from_action, select_action};
use crate::agent::{DdpgAgent, UpdateStats};
use crate::error::{AgentError, Result};
use crate::replay::{compute_reward, loss_objective, Experience};
use crate::state::{build_state, StateNormalizer};

/// Replaces the sampled impact factors while the agent keeps running.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImpactOverride {
    /// `n_k / n`, i.e. FedAvg weights.
    SampleCounts,
}

impl FromStr for ImpactOverride {
    type Err = AgentError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed:n_k/n" => Ok(Self::SampleCounts),
            other => Err(AgentError::Config(format!("unknown impact override {other:?}"))),
        }
    }
}

/// Online loop on the server: observe the round's reports, emit impact
/// factors, and learn from the transition once the next round's losses
/// are known.
#[derive(Clone, Debug)]
pub struct FedDrlPolicy {
    pub agent: DdpgAgent,
    pub normalizer: StateNormalizer,
    pub explore: bool,
    /// Whether to store experiences and run updates.
    pub train: bool,
    pub impact_override: Option<ImpactOverride>,
    rng: ChaCha8Rng,
    pending: Option<(Vec<f64>, Vec<f64>)>,
    /// Normalized state, raw `l_b` and action of the current round.
    observed: Option<(Vec<f64>, Vec<f64>, Vec<f64>)>,
    rewards: Vec<f64>,
    updates: Vec<UpdateStats>,
}

fn policy_err(e: AgentError) -> FlError {
    match e {
        AgentError::Fl(e) => e,
        other => FlError::Policy(other.to_string()),
    }
}

impl FedDrlPolicy {
    /// `worker` selects the exploration and impact-sampling stream.
    pub fn new(agent: DdpgAgent, worker: u64) -> Self {
        let cfg = &agent.cfg;
        Self {
            normalizer: StateNormalizer::new(cfg.normalize_state),
            rng: stream_rng(cfg.seed, Stream::Agent, &[1, worker]),
            agent,
            explore: true,
            train: true,
            impact_override: None,
            pending: None,
            observed: None,
            rewards: Vec::new(),
            updates: Vec::new(),
        }
    }

    /// Rewards in the order they were assigned.
    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub fn update_stats(&self) -> &[UpdateStats] {
        &self.updates
    }

    pub fn into_agent(self) -> DdpgAgent {
        self.agent
    }

    fn reward(&self, losses_before: &[f64]) -> f64 {
        if self.agent.cfg.negate_reward {
            compute_reward(losses_before)
        } else {
            loss_objective(losses_before)
        }
    }

    fn decide(&mut self, round: usize, reports: &[ClientReport]) -> Result<ImpactVector> {
        let s = build_state(reports, round, self.agent.k())?;
        let sn = self.normalizer.normalize(&s);
        let cfg = &self.agent.cfg;
        let noise = cfg.noise_scale(round);
        let action = select_action(&self.agent.pi, &sn, self.explore, noise, cfg.beta, &mut self.rng)?;
        let sampled = impacts_from_action(&action, &mut self.rng)?;
        let impacts = match self.impact_override {
            Some(ImpactOverride::SampleCounts) => fedavg_impacts(reports)?,
            None => sampled,
        };
        self.observed = Some((sn, s.losses_before, action.flat()));
        Ok(impacts)
    }

    fn absorb(&mut self) -> Result<()> {
        let Some((sn, lb, action)) = self.observed.take() else {
            return Ok(());
        };
        if let Some((s, a)) = self.pending.take() {
            let reward = self.reward(&lb);
            self.rewards.push(reward);
            if self.train {
                self.agent.remember(Experience {
                    state: s,
                    action: a,
                    reward,
                    next_state: sn.clone(),
                    priority: 0.0,
                    seq: 0,
                })?;
            }
        }
        self.pending = Some((sn, action));
        if self.train && self.agent.buffer.len() >= self.agent.cfg.batch_size {
            let n = self.agent.cfg.updates_per_round;
            self.updates.push(self.agent.ddpg_update(n)?);
        }
        Ok(())
    }
}

impl ImpactPolicy for FedDrlPolicy {
    fn impacts(&mut self, round: usize, reports: &[ClientReport]) -> feddrl_fl::Result<ImpactVector> {
        self.decide(round, reports).map_err(policy_err)
    }

    fn learn(&mut self, _round: usize) -> feddrl_fl::Result<()> {
        self.absorb().map_err(policy_err)
    }
}
