use std::path::{Path, PathBuf};

use feddrl_agent::{AgentConfig, ImpactOverride};
use feddrl_data::{PartitionSpec, SyntheticSpec};
use feddrl_fl::{AggregatorKind, RoundConfig};
use feddrl_nn::Activation;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    /// `train-*` / `t10k-*` IDX files, optionally gzipped.
    Mnist,
    Synthetic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub kind: DatasetKind,
    pub dir: PathBuf,
    pub train_limit: Option<usize>,
    pub test_limit: Option<usize>,
    pub synthetic: SyntheticSpec,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            kind: DatasetKind::Mnist,
            dir: PathBuf::from("data/mnist"),
            train_limit: Some(5000),
            test_limit: Some(1000),
            synthetic: SyntheticSpec::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub hidden: Vec<usize>,
    pub activation: Activation,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            hidden: vec![64],
            activation: Activation::Relu,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AgentMode {
    /// One agent learns while the reported run proceeds.
    Online,
    /// Workers on separately seeded environments, offline training of the
    /// main agent on their merged experience, then the reported run.
    TwoStage,
}

/// How the aggregation agent is driven when `round.aggregator = "feddrl"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FedDrlConfig {
    pub mode: AgentMode,
    /// `"fixed:n_k/n"` replaces the sampled impact factors by FedAvg weights.
    pub impact_override: Option<String>,
    /// Start the reported run from this agent checkpoint.
    pub init_checkpoint: Option<PathBuf>,
    /// Exploration noise during the reported run.
    pub explore: bool,
    /// Store experiences and update during the reported run.
    pub train: bool,
}

impl Default for FedDrlConfig {
    fn default() -> Self {
        Self {
            mode: AgentMode::Online,
            impact_override: None,
            init_checkpoint: None,
            explore: true,
            train: true,
        }
    }
}

impl FedDrlConfig {
    pub fn impact_override(&self) -> Result<Option<ImpactOverride>> {
        self.impact_override
            .as_deref()
            .map(|s| s.parse().map_err(|e: feddrl_agent::AgentError| CliError::Config(e.to_string())))
            .transpose()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// When set, replaces the partition, round and agent seeds.
    pub seed: Option<u64>,
    pub output_dir: PathBuf,
    /// Existing manifest to use instead of partitioning.
    pub partition_manifest: Option<PathBuf>,
    pub dataset: DatasetConfig,
    pub model: ModelConfig,
    pub partition: PartitionSpec,
    pub round: RoundConfig,
    pub agent: AgentConfig,
    pub feddrl: FedDrlConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: None,
            output_dir: PathBuf::from("runs/default"),
            partition_manifest: None,
            dataset: DatasetConfig::default(),
            model: ModelConfig::default(),
            partition: PartitionSpec::default(),
            round: RoundConfig::default(),
            agent: AgentConfig::default(),
            feddrl: FedDrlConfig::default(),
        }
    }
}

/// Parses `value` as a TOML value, falling back to a bare string.
fn parse_value(value: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {value}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()))
}

/// Applies `a.b.c=value` to a TOML table, creating tables on the way.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, value) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override {assignment:?} is not key=value")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("bad override key {key:?}")));
    }
    let (last, parents) = path.split_last().expect("nonempty path");
    let mut cur = table;
    for p in parents {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("{key}: {p} is not a section")))?;
    }
    cur.insert(last.to_string(), parse_value(value.trim()));
    Ok(())
}

impl ExperimentConfig {
    /// Parses config text, applies overrides (which take precedence), then
    /// resolves seeds and validates.
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: Self = table.try_into().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        let cfg = cfg.resolved();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text, overrides)
    }

    /// Pushes the global seed into the sections and ties an unset noise
    /// schedule to the run length.
    pub fn resolved(mut self) -> Self {
        if self.agent.noise_decay_rounds == 0 {
            self.agent.noise_decay_rounds = self.round.max_rounds;
        }
        if let Some(s) = self.seed {
            self.partition.seed = s;
            self.round.seed = s;
            self.agent.seed = s;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Config(m));
        self.round.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.agent.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.feddrl.impact_override()?;
        if self.partition_manifest.is_none() && self.partition.clients != self.round.total_clients {
            return bad(format!(
                "partition.clients = {} but round.total_clients = {}",
                self.partition.clients, self.round.total_clients
            ));
        }
        if self.round.aggregator == AggregatorKind::FedDrl
            && self.feddrl.mode == AgentMode::TwoStage
            && self.feddrl.init_checkpoint.is_some()
        {
            return bad("feddrl.init_checkpoint and two-stage mode are exclusive".into());
        }
        if self.model.hidden.contains(&0) {
            return bad("model.hidden widths must be positive".into());
        }
        Ok(())
    }

    /// Full, reloadable echo of the resolved config.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn method_name(&self) -> String {
        match self.round.aggregator {
            AggregatorKind::FedAvg => "fedavg",
            AggregatorKind::FedProx => "fedprox",
            AggregatorKind::FedDrl => "feddrl",
        }
        .to_string()
    }
}
