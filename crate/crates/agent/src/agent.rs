use feddrl_fl::{stream_rng, Stream};
use feddrl_nn::{mlp, Activation, LayerSpec, Network, Tensor};
use rand_chacha::ChaCha8Rng;

use crate::action::{action_map_backward, constrain};
use crate::config::AgentConfig;
use crate::error::{AgentError, Result};
use crate::replay::{Experience, ReplayBuffer};

pub fn policy_specs(k: usize, cfg: &AgentConfig) -> Vec<LayerSpec> {
    mlp(3 * k, &vec![cfg.hidden; cfg.pi_layers], 2 * k, Activation::LeakyRelu)
}

pub fn value_specs(k: usize, cfg: &AgentConfig) -> Vec<LayerSpec> {
    mlp(5 * k, &vec![cfg.hidden; cfg.q_layers], 1, Activation::LeakyRelu)
}

/// Mean losses over the updates of one [`DdpgAgent::ddpg_update`] call.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct UpdateStats {
    pub updates: usize,
    pub critic_loss: f64,
    /// Mean `Q(s, π(s))` over the sampled states, before the actor step.
    pub actor_value: f64,
}

/// Actor, critic and their targets plus the replay buffer.
#[derive(Clone, Debug)]
pub struct DdpgAgent {
    pub cfg: AgentConfig,
    k: usize,
    pub pi: Network,
    pub q: Network,
    pub pi_target: Network,
    pub q_target: Network,
    pub buffer: ReplayBuffer,
    rng: ChaCha8Rng,
}

/// Row-major `[s | a]` rows for a batch.
fn stack(rows: impl Iterator<Item = (Vec<f64>, Vec<f64>)>, width: usize) -> (usize, Vec<f64>) {
    let mut data = Vec::new();
    let mut n = 0;
    for (s, a) in rows {
        data.extend_from_slice(&s);
        data.extend_from_slice(&a);
        n += 1;
    }
    debug_assert_eq!(data.len(), n * width);
    (n, data)
}

impl DdpgAgent {
    /// Fresh networks from the agent stream of `cfg.seed`; targets start as
    /// copies. `sampler_id` separates replay-sampling streams of agents that
    /// share initial networks.
    pub fn new(k: usize, cfg: AgentConfig, sampler_id: u64) -> Result<Self> {
        cfg.validate()?;
        if k == 0 {
            return Err(AgentError::Config("K must be positive".into()));
        }
        let mut init = stream_rng(cfg.seed, Stream::Agent, &[0]);
        let pi = Network::new(policy_specs(k, &cfg), &mut init)?;
        let q = Network::new(value_specs(k, &cfg), &mut init)?;
        Ok(Self {
            pi_target: pi.clone(),
            q_target: q.clone(),
            pi,
            q,
            buffer: ReplayBuffer::new(cfg.buffer_capacity),
            rng: stream_rng(cfg.seed, Stream::Agent, &[2, sampler_id]),
            cfg,
            k,
        })
    }

    /// Agent around existing networks (e.g. from a checkpoint).
    pub fn from_networks(
        cfg: AgentConfig,
        k: usize,
        nets: [Network; 4],
        sampler_id: u64,
    ) -> Result<Self> {
        cfg.validate()?;
        let [pi, q, pi_target, q_target] = nets;
        for (name, n, i, o) in [
            ("policy", &pi, 3 * k, 2 * k),
            ("value", &q, 5 * k, 1),
            ("target policy", &pi_target, 3 * k, 2 * k),
            ("target value", &q_target, 5 * k, 1),
        ] {
            if n.input_width() != i || n.output_width() != o {
                return Err(AgentError::Config(format!(
                    "{name} network is {} -> {}, expected {i} -> {o}",
                    n.input_width(),
                    n.output_width()
                )));
            }
        }
        Ok(Self {
            buffer: ReplayBuffer::new(cfg.buffer_capacity),
            rng: stream_rng(cfg.seed, Stream::Agent, &[2, sampler_id]),
            cfg,
            k,
            pi,
            q,
            pi_target,
            q_target,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn networks(&self) -> [&Network; 4] {
        [&self.pi, &self.q, &self.pi_target, &self.q_target]
    }

    /// `Q(s, a)` for each row.
    pub fn q_values(net: &Network, rows: &[(&[f64], &[f64])]) -> Result<Vec<f64>> {
        if rows.is_empty() {
            return Ok(Vec::new());
        }
        let width = net.input_width();
        let (n, data) = stack(rows.iter().map(|(s, a)| (s.to_vec(), a.to_vec())), width);
        Ok(net.predict(&Tensor::matrix(n, width, data))?.into_data())
    }

    /// `|r + γ·Q(s', a) − Q(s, a)|` under the main value network.
    pub fn td_priority(&self, e: &Experience) -> Result<f64> {
        let q = Self::q_values(&self.q, &[(&e.next_state, &e.action), (&e.state, &e.action)])?;
        Ok((e.reward + self.cfg.gamma * q[0] - q[1]).abs())
    }

    /// Recomputes every stored priority with the current value network.
    pub fn reprioritize(&mut self) -> Result<()> {
        let items = self.buffer.items();
        if items.is_empty() {
            return Ok(());
        }
        let mut rows: Vec<(&[f64], &[f64])> = Vec::with_capacity(2 * items.len());
        for e in items {
            rows.push((&e.next_state, &e.action));
            rows.push((&e.state, &e.action));
        }
        let q = Self::q_values(&self.q, &rows)?;
        let gamma = self.cfg.gamma;
        for (i, e) in self.buffer.items_mut().iter_mut().enumerate() {
            e.priority = (e.reward + gamma * q[2 * i] - q[2 * i + 1]).abs();
        }
        Ok(())
    }

    /// Stores an experience with its TD priority.
    pub fn remember(&mut self, mut e: Experience) -> Result<()> {
        if e.state.len() != 3 * self.k || e.next_state.len() != 3 * self.k || e.action.len() != 2 * self.k {
            return Err(AgentError::State("experience does not match K".into()));
        }
        e.priority = self.td_priority(&e)?;
        if !e.priority.is_finite() {
            return Err(AgentError::NonFinite("priority"));
        }
        self.buffer.push(e);
        Ok(())
    }

    /// Constrained target-policy actions for a batch of states.
    fn target_actions(&self, states: &[&[f64]]) -> Result<Vec<Vec<f64>>> {
        let k = self.k;
        let data: Vec<f64> = states.iter().flat_map(|s| s.iter().copied()).collect();
        let raw = self.pi_target.predict(&Tensor::matrix(states.len(), 3 * k, data))?;
        Ok((0..states.len())
            .map(|i| {
                let r = raw.row(i);
                constrain(r[..k].to_vec(), &r[k..], self.cfg.beta).flat()
            })
            .collect())
    }

    /// `r + γ·Q'(s', g(π'(s')))` per experience.
    pub fn td_targets(&self, batch: &[&Experience]) -> Result<Vec<f64>> {
        let next: Vec<&[f64]> = batch.iter().map(|e| e.next_state.as_slice()).collect();
        let acts = self.target_actions(&next)?;
        let rows: Vec<(&[f64], &[f64])> =
            next.iter().zip(&acts).map(|(s, a)| (*s, a.as_slice())).collect();
        let q = Self::q_values(&self.q_target, &rows)?;
        Ok(batch
            .iter()
            .zip(q)
            .map(|(e, q)| e.reward + self.cfg.gamma * q)
            .collect())
    }

    /// Mean squared TD error of `q` against fixed targets.
    pub fn value_loss(q: &Network, batch: &[&Experience], targets: &[f64]) -> Result<f64> {
        let rows: Vec<(&[f64], &[f64])> =
            batch.iter().map(|e| (e.state.as_slice(), e.action.as_slice())).collect();
        let v = Self::q_values(q, &rows)?;
        Ok(v.iter().zip(targets).map(|(a, y)| (a - y).powi(2)).sum::<f64>() / v.len() as f64)
    }

    /// Loss and its gradient with respect to the value parameters.
    pub fn value_gradient(&mut self, batch: &[&Experience], targets: &[f64]) -> Result<(f64, Vec<f64>)> {
        let width = 5 * self.k;
        let (n, data) = stack(batch.iter().map(|e| (e.state.clone(), e.action.clone())), width);
        let v = self.q.forward(&Tensor::matrix(n, width, data))?.into_data();
        let nf = n as f64;
        let loss = v.iter().zip(targets).map(|(a, y)| (a - y).powi(2)).sum::<f64>() / nf;
        let d: Vec<f64> = v.iter().zip(targets).map(|(a, y)| 2.0 * (a - y) / nf).collect();
        let g = self.q.backward(&Tensor::matrix(n, 1, d))?;
        Ok((loss, g.into_inner()))
    }

    /// One critic step on `batch`; returns the pre-step loss.
    pub fn update_value_on_batch(&mut self, batch: &[&Experience]) -> Result<f64> {
        let targets = self.td_targets(batch)?;
        let (loss, g) = self.value_gradient(batch, &targets)?;
        self.q.apply_gradient(&g, self.cfg.q_lr)?;
        Ok(loss)
    }

    /// Mean `Q(s, g(π(s)))` over `states`.
    pub fn actor_objective(pi: &Network, q: &Network, states: &[&[f64]], beta: f64) -> Result<f64> {
        let k = pi.output_width() / 2;
        let data: Vec<f64> = states.iter().flat_map(|s| s.iter().copied()).collect();
        let raw = pi.predict(&Tensor::matrix(states.len(), 3 * k, data))?;
        let acts: Vec<Vec<f64>> = (0..states.len())
            .map(|i| {
                let r = raw.row(i);
                constrain(r[..k].to_vec(), &r[k..], beta).flat()
            })
            .collect();
        let rows: Vec<(&[f64], &[f64])> =
            states.iter().zip(&acts).map(|(s, a)| (*s, a.as_slice())).collect();
        let v = Self::q_values(q, &rows)?;
        Ok(v.iter().sum::<f64>() / v.len() as f64)
    }

    /// Objective and its gradient with respect to the policy parameters.
    pub fn policy_gradient(&mut self, states: &[&[f64]]) -> Result<(f64, Vec<f64>)> {
        let k = self.k;
        let n = states.len();
        let beta = self.cfg.beta;
        let data: Vec<f64> = states.iter().flat_map(|s| s.iter().copied()).collect();
        let raw = self.pi.forward(&Tensor::matrix(n, 3 * k, data))?;
        let mut qin = Vec::with_capacity(n * 5 * k);
        for (i, s) in states.iter().enumerate() {
            let r = raw.row(i);
            qin.extend_from_slice(s);
            qin.extend(constrain(r[..k].to_vec(), &r[k..], beta).flat());
        }
        let v = self.q.forward(&Tensor::matrix(n, 5 * k, qin))?.into_data();
        let objective = v.iter().sum::<f64>() / n as f64;
        let (_, dx) = self
            .q
            .backward_with_input(&Tensor::matrix(n, 1, vec![1.0 / n as f64; n]))?;
        let mut d_raw = Vec::with_capacity(n * 2 * k);
        for i in 0..n {
            let d_a = &dx.row(i)[3 * k..];
            d_raw.extend(action_map_backward(raw.row(i), beta, d_a));
        }
        let g = self.pi.backward(&Tensor::matrix(n, 2 * k, d_raw))?;
        Ok((objective, g.into_inner()))
    }

    /// One actor ascent step; returns the pre-step objective.
    pub fn update_policy_on_batch(&mut self, states: &[&[f64]]) -> Result<f64> {
        let (obj, g) = self.policy_gradient(states)?;
        // ascent: w ← w + lr·g
        self.pi.apply_gradient(&g, -self.cfg.pi_lr)?;
        Ok(obj)
    }

    /// Blends both targets toward the main networks.
    pub fn soft_update(&mut self) -> Result<()> {
        let (rho, conventional) = (self.cfg.rho, self.cfg.conventional_polyak);
        soft_update(&mut self.pi_target, &self.pi, rho, conventional)?;
        soft_update(&mut self.q_target, &self.q, rho, conventional)
    }

    /// Reprioritizes and sorts the buffer, then runs `b` iterations of
    /// rank-biased sampling, critic step, actor step and soft update.
    pub fn ddpg_update(&mut self, b: usize) -> Result<UpdateStats> {
        let need = self.cfg.batch_size;
        if self.buffer.len() < need {
            return Err(AgentError::InsufficientBuffer {
                have: self.buffer.len(),
                need,
            });
        }
        self.reprioritize()?;
        self.buffer.sort_by_priority();
        let mut stats = UpdateStats::default();
        for _ in 0..b {
            let idx = self.buffer.sample_indices(need, &mut self.rng)?;
            let batch: Vec<Experience> = idx.iter().map(|&i| self.buffer.items()[i].clone()).collect();
            let refs: Vec<&Experience> = batch.iter().collect();
            stats.critic_loss += self.update_value_on_batch(&refs)?;
            let states: Vec<&[f64]> = batch.iter().map(|e| e.state.as_slice()).collect();
            stats.actor_value += self.update_policy_on_batch(&states)?;
            self.soft_update()?;
            stats.updates += 1;
        }
        if b > 0 {
            stats.critic_loss /= b as f64;
            stats.actor_value /= b as f64;
        }
        Ok(stats)
    }

    /// Switches replay sampling to stream `sampler_id`.
    pub fn reseed_sampler(&mut self, sampler_id: u64) {
        self.rng = stream_rng(self.cfg.seed, Stream::Agent, &[2, sampler_id]);
    }
}

/// Literal rule `target ← ρ·target + (1−ρ)·main`, or with `conventional`
/// `target ← (1−ρ)·target + ρ·main`.
pub fn soft_update(target: &mut Network, main: &Network, rho: f64, conventional: bool) -> Result<()> {
    if target.param_count() != main.param_count() {
        return Err(AgentError::State("target and main networks differ in size".into()));
    }
    let (keep, take) = if conventional { (1.0 - rho, rho) } else { (rho, 1.0 - rho) };
    let blended: Vec<f64> = target
        .params()
        .iter()
        .zip(main.params())
        .map(|(t, m)| keep * t + take * m)
        .collect();
    target.set_params(&blended)?;
    Ok(())
}
