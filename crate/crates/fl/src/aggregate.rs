use feddrl_nn::ModelParams;

use crate::error::{FlError, Result};

/// What a client sends back after local training.
#[derive(Clone, Debug, PartialEq)]
pub struct ClientReport {
    pub client_id: usize,
    /// Mean cross-entropy of the received global model on the local shard.
    pub loss_before: f64,
    /// Mean cross-entropy of the locally trained model on the local shard.
    pub loss_after: f64,
    pub num_samples: usize,
    pub params: ModelParams,
}

impl ClientReport {
    pub fn validate(&self) -> Result<()> {
        let ok = |l: f64| l.is_finite() && l >= 0.0;
        if !ok(self.loss_before) || !ok(self.loss_after) {
            return Err(FlError::Aggregation(format!(
                "client {} reported invalid losses",
                self.client_id
            )));
        }
        if self.num_samples == 0 {
            return Err(FlError::Aggregation(format!(
                "client {} reported zero samples",
                self.client_id
            )));
        }
        Ok(())
    }
}

/// Tolerance on the sum of an impact vector.
pub const IMPACT_SUM_TOL: f64 = 1e-9;

/// Per-participant aggregation weights: nonnegative, summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct ImpactVector(Vec<f64>);

impl ImpactVector {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(FlError::Impacts("empty".into()));
        }
        if let Some(a) = alpha.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
            return Err(FlError::Impacts(format!("entry {a} is not a finite nonnegative value")));
        }
        let sum: f64 = alpha.iter().sum();
        if (sum - 1.0).abs() > IMPACT_SUM_TOL {
            return Err(FlError::Impacts(format!("entries sum to {sum}")));
        }
        Ok(Self(alpha))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// `Σ_k α_k · w_k`, elementwise.
pub fn aggregate_weighted(reports: &[ClientReport], alpha: &ImpactVector) -> Result<ModelParams> {
    if reports.len() != alpha.len() {
        return Err(FlError::Aggregation(format!(
            "{} reports for {} weights",
            reports.len(),
            alpha.len()
        )));
    }
    let len = reports[0].params.len();
    if let Some(r) = reports.iter().find(|r| r.params.len() != len) {
        return Err(FlError::Aggregation(format!(
            "client {} sent {} parameters, expected {len}",
            r.client_id,
            r.params.len()
        )));
    }
    let mut out = vec![0.0; len];
    for (r, &a) in reports.iter().zip(alpha.as_slice()) {
        for (o, w) in out.iter_mut().zip(r.params.iter()) {
            *o += a * w;
        }
    }
    Ok(ModelParams::new(out))
}

/// `α_k = n_k / Σ n_j`.
pub fn fedavg_impacts(reports: &[ClientReport]) -> Result<ImpactVector> {
    let total: usize = reports.iter().map(|r| r.num_samples).sum();
    if reports.is_empty() || total == 0 {
        return Err(FlError::Impacts("no samples reported".into()));
    }
    ImpactVector::new(
        reports
            .iter()
            .map(|r| r.num_samples as f64 / total as f64)
            .collect(),
    )
}
