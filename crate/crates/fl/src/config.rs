use std::fmt;
use std::str::FromStr;

use feddrl_nn::SgdConfig;
use serde::{Deserialize, Serialize};

use crate::error::{FlError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregatorKind {
    FedAvg,
    FedProx,
    FedDrl,
}

impl AggregatorKind {
    pub const ALL: [AggregatorKind; 3] = [
        AggregatorKind::FedAvg,
        AggregatorKind::FedProx,
        AggregatorKind::FedDrl,
    ];
}

impl fmt::Display for AggregatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AggregatorKind::FedAvg => "fedavg",
            AggregatorKind::FedProx => "fedprox",
            AggregatorKind::FedDrl => "feddrl",
        })
    }
}

impl FromStr for AggregatorKind {
    type Err = FlError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fedavg" => Ok(AggregatorKind::FedAvg),
            "fedprox" => Ok(AggregatorKind::FedProx),
            "feddrl" => Ok(AggregatorKind::FedDrl),
            _ => Err(FlError::Config(format!("unknown aggregator {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoundConfig {
    /// N.
    pub total_clients: usize,
    /// K, sampled uniformly without replacement each round.
    pub participants: usize,
    /// T.
    pub max_rounds: usize,
    pub sgd: SgdConfig,
    pub aggregator: AggregatorKind,
    pub seed: u64,
}

impl Default for RoundConfig {
    fn default() -> Self {
        Self {
            total_clients: 10,
            participants: 10,
            max_rounds: 1000,
            sgd: SgdConfig::default(),
            aggregator: AggregatorKind::FedAvg,
            seed: 0,
        }
    }
}

impl RoundConfig {
    pub fn validate(&self) -> Result<()> {
        if self.participants == 0 || self.participants > self.total_clients {
            return Err(FlError::Config(format!(
                "participants K = {} must be in 1..=N = {}",
                self.participants, self.total_clients
            )));
        }
        if self.max_rounds == 0 {
            return Err(FlError::Config("max_rounds must be positive".into()));
        }
        self.sgd
            .validate()
            .map_err(|e| FlError::Config(e.to_string()))
    }

    /// The local solver actually used: FedProx adds the proximal term
    /// (default weight 0.01 when none is configured).
    pub fn local_sgd(&self) -> SgdConfig {
        let mut sgd = self.sgd;
        if self.aggregator == AggregatorKind::FedProx && sgd.proximal_mu == 0.0 {
            sgd.proximal_mu = SgdConfig::FEDPROX_MU;
        }
        sgd
    }
}
