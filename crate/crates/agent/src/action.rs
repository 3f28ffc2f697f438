use feddrl_fl::{FlError, ImpactVector};
use feddrl_nn::{Network, Tensor};
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{AgentError, Result};

/// Largest logit gap kept by [`stable_softmax`]; `exp(-700)` is still a
/// normal `f64`, so every weight stays strictly positive.
pub const MAX_LOGIT_GAP: f64 = 700.0;

/// Per-client Gaussian parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct AggAction {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl AggAction {
    pub fn k(&self) -> usize {
        self.mu.len()
    }

    /// `[μ…, σ…]`.
    pub fn flat(&self) -> Vec<f64> {
        let mut v = self.mu.clone();
        v.extend_from_slice(&self.sigma);
        v
    }

    pub fn from_flat(v: &[f64]) -> Result<Self> {
        if !v.len().is_multiple_of(2) {
            return Err(AgentError::State(format!("action of odd length {}", v.len())));
        }
        let k = v.len() / 2;
        Ok(Self {
            mu: v[..k].to_vec(),
            sigma: v[k..].to_vec(),
        })
    }
}

pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// μ as given, σ = min(softplus(raw σ), β·|μ|).
pub fn constrain(mu: Vec<f64>, raw_sigma: &[f64], beta: f64) -> AggAction {
    let sigma = mu
        .iter()
        .zip(raw_sigma)
        .map(|(m, &s)| softplus(s).min(beta * m.abs()))
        .collect();
    AggAction { mu, sigma }
}

/// Whether σ_k came from the β·|μ_k| bound rather than softplus.
pub fn sigma_clamped(mu: f64, raw_sigma: f64, beta: f64) -> bool {
    beta * mu.abs() < softplus(raw_sigma)
}

/// Gradient of a scalar with respect to the raw policy output, given its
/// gradient with respect to the constrained action.
pub fn action_map_backward(raw: &[f64], beta: f64, d_action: &[f64]) -> Vec<f64> {
    let k = raw.len() / 2;
    let mut d_raw = vec![0.0; 2 * k];
    for i in 0..k {
        let (mu, rs) = (raw[i], raw[k + i]);
        let (d_mu, d_sigma) = (d_action[i], d_action[k + i]);
        d_raw[i] = d_mu;
        if sigma_clamped(mu, rs, beta) {
            d_raw[i] += d_sigma * beta * mu.signum();
        } else {
            d_raw[k + i] = d_sigma * sigmoid(rs);
        }
    }
    d_raw
}

/// Policy forward on one normalized state, optional Gaussian noise of
/// std `noise` on μ, then the σ constraint.
pub fn select_action<R: Rng + ?Sized>(
    policy: &Network,
    state: &[f64],
    explore: bool,
    noise: f64,
    beta: f64,
    rng: &mut R,
) -> Result<AggAction> {
    let raw = policy.predict(&Tensor::vector(state.to_vec()))?.into_data();
    if !raw.iter().all(|v| v.is_finite()) {
        return Err(AgentError::NonFinite("policy output"));
    }
    let k = raw.len() / 2;
    let mut mu = raw[..k].to_vec();
    if explore && noise > 0.0 {
        let n = Normal::new(0.0, noise).map_err(|e| AgentError::Config(e.to_string()))?;
        for m in &mut mu {
            *m += n.sample(rng);
        }
    }
    Ok(constrain(mu, &raw[k..], beta))
}

/// Softmax with the logit spread capped at [`MAX_LOGIT_GAP`].
pub fn stable_softmax(x: &[f64]) -> Vec<f64> {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = x.iter().map(|v| (v - m).max(-MAX_LOGIT_GAP).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Draws `x_k ~ N(μ_k, σ_k)` and returns `softmax(x)`.
pub fn impacts_from_action<R: Rng + ?Sized>(a: &AggAction, rng: &mut R) -> Result<ImpactVector> {
    let x: Vec<f64> = a
        .mu
        .iter()
        .zip(&a.sigma)
        .map(|(m, s)| {
            let z: f64 = StandardNormal.sample(rng);
            m + s * z
        })
        .collect();
    if !x.iter().all(|v| v.is_finite()) {
        return Err(AgentError::NonFinite("impact logits"));
    }
    ImpactVector::new(stable_softmax(&x)).map_err(|e: FlError| e.into())
}
