use std::path::Path;
use std::sync::Arc;

use feddrl_agent::{
    encode_agent, encode_experiences, load_agent, two_stage_train, AgentCheckpoint, DdpgAgent,
    FedDrlPolicy, TwoStageOutcome,
};
use feddrl_data::{
    load_mnist_dir, partition, partition_stats, synthetic, Dataset, PartitionManifest,
};
use feddrl_fl::{stream_seed, AggregatorKind, FedAvgPolicy, Federation, RoundConfig, Stream};
use feddrl_metrics::{best_top1, RunLog};
use feddrl_nn::{mlp, LayerSpec, ModelParams, Network};

use crate::config::{AgentMode, DatasetKind, ExperimentConfig};
use crate::error::{CliError, Result};

pub fn load_datasets(cfg: &ExperimentConfig) -> Result<(Dataset, Dataset)> {
    let d = &cfg.dataset;
    Ok(match d.kind {
        DatasetKind::Mnist => load_mnist_dir(&d.dir, "mnist", d.train_limit, d.test_limit)?,
        DatasetKind::Synthetic => {
            let (train, test) = synthetic(&d.synthetic)?;
            let cut = |ds: Dataset, n: Option<usize>| match n {
                Some(n) => ds.truncated(n),
                None => ds,
            };
            (cut(train, d.train_limit), cut(test, d.test_limit))
        }
    })
}

/// Loads `partition_manifest` when given, otherwise partitions `train`.
pub fn build_manifest(cfg: &ExperimentConfig, train: &Dataset) -> Result<PartitionManifest> {
    if let Some(path) = &cfg.partition_manifest {
        let m = PartitionManifest::load(path)?;
        m.validate_against(train)?;
        if m.client_count() != cfg.round.total_clients {
            return Err(CliError::Config(format!(
                "manifest has {} clients but round.total_clients = {}",
                m.client_count(),
                cfg.round.total_clients
            )));
        }
        return Ok(m);
    }
    cfg.partition
        .validate(train.class_count())
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(partition(train, &cfg.partition)?)
}

pub fn model_specs(cfg: &ExperimentConfig, train: &Dataset) -> Vec<LayerSpec> {
    mlp(train.feature_dim(), &cfg.model.hidden, train.class_count(), cfg.model.activation)
}

/// Datasets, client split and model layout of one experiment.
#[derive(Clone, Debug)]
pub struct Environment {
    pub train: Dataset,
    pub test: Dataset,
    pub manifest: PartitionManifest,
    pub specs: Vec<LayerSpec>,
}

pub fn build_environment(cfg: &ExperimentConfig) -> Result<Environment> {
    let (train, test) = load_datasets(cfg)?;
    let manifest = build_manifest(cfg, &train)?;
    let specs = model_specs(cfg, &train);
    Ok(Environment {
        train,
        test,
        manifest,
        specs,
    })
}

/// Everything a run produces.
#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub log: RunLog,
    pub specs: Vec<LayerSpec>,
    pub global: ModelParams,
    /// FedDRL only: the agent after the reported run.
    pub agent: Option<AgentCheckpoint>,
    /// FedDRL only: rewards assigned during the reported run.
    pub rewards: Vec<f64>,
    /// FedDRL two-stage mode only.
    pub two_stage: Option<TwoStageOutcome>,
}

impl RunArtifacts {
    pub fn model_checkpoint(&self) -> Result<Vec<u8>> {
        Ok(Network::with_params(self.specs.clone(), self.global.to_vec())?.to_checkpoint_bytes())
    }
}

/// Round config of stage-1 worker `w`: same settings, own seed.
fn worker_round(cfg: &RoundConfig, w: usize) -> RoundConfig {
    RoundConfig {
        seed: stream_seed(cfg.seed, Stream::Agent, &[3, w as u64]),
        ..cfg.clone()
    }
}

fn initial_policy(cfg: &ExperimentConfig, fed: &Federation) -> Result<(FedDrlPolicy, Option<TwoStageOutcome>)> {
    let k = cfg.round.participants;
    let (agent, normalizer, staged) = if let Some(path) = &cfg.feddrl.init_checkpoint {
        let ck = load_agent(path)?;
        let nets = [ck.agent.pi, ck.agent.q, ck.agent.pi_target, ck.agent.q_target];
        (DdpgAgent::from_networks(cfg.agent.clone(), k, nets, 0)?, Some(ck.normalizer), None)
    } else if cfg.feddrl.mode == AgentMode::TwoStage {
        let (clients, test) = (fed.shared_clients(), fed.shared_test());
        let make = |w: usize| {
            Federation::from_parts(
                fed.specs().to_vec(),
                Arc::clone(&clients),
                Arc::clone(&test),
                worker_round(&cfg.round, w),
            )
        };
        let out = two_stage_train(make, &cfg.agent, k)?;
        (out.main.clone(), None, Some(out))
    } else {
        (DdpgAgent::new(k, cfg.agent.clone(), 0)?, None, None)
    };
    let mut policy = FedDrlPolicy::new(agent, 0);
    if let Some(n) = normalizer {
        policy.normalizer = n;
    }
    policy.explore = cfg.feddrl.explore;
    policy.train = cfg.feddrl.train;
    policy.impact_override = cfg.feddrl.impact_override()?;
    Ok((policy, staged))
}

/// Runs `cfg.round.max_rounds` rounds with the configured aggregator.
pub fn run_experiment(cfg: &ExperimentConfig, env: &Environment) -> Result<RunArtifacts> {
    let mut fed = Federation::new(env.specs.clone(), &env.train, &env.test, &env.manifest, cfg.round.clone())?;
    match cfg.round.aggregator {
        AggregatorKind::FedAvg | AggregatorKind::FedProx => {
            fed.run(&mut FedAvgPolicy)?;
            Ok(RunArtifacts {
                specs: env.specs.clone(),
                global: fed.global().clone(),
                log: fed.into_log(),
                agent: None,
                rewards: Vec::new(),
                two_stage: None,
            })
        }
        AggregatorKind::FedDrl => {
            let (mut policy, two_stage) = initial_policy(cfg, &fed)?;
            fed.run(&mut policy)?;
            let rewards = policy.rewards().to_vec();
            let normalizer = policy.normalizer.clone();
            Ok(RunArtifacts {
                specs: env.specs.clone(),
                global: fed.global().clone(),
                log: fed.into_log(),
                agent: Some(AgentCheckpoint {
                    agent: policy.into_agent(),
                    normalizer,
                }),
                rewards,
                two_stage,
            })
        }
    }
}

fn write(dir: &Path, name: &str, bytes: impl AsRef<[u8]>) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Config echo, manifest and per-client statistics.
pub fn write_partition(dir: &Path, cfg: &ExperimentConfig, manifest: &PartitionManifest) -> Result<()> {
    create_dir(dir)?;
    write(dir, "config.toml", cfg.to_toml())?;
    write(dir, "manifest.txt", manifest.to_text())?;
    let stats = partition_stats(manifest);
    write(dir, "stats.csv", stats.to_csv())?;
    write(dir, "stats_summary.csv", stats.summary_csv())
}

/// All outputs of a run. Everything except `timing.csv` is a pure function
/// of the config.
pub fn write_run(dir: &Path, cfg: &ExperimentConfig, env: &Environment, run: &RunArtifacts) -> Result<()> {
    write_partition(dir, cfg, &env.manifest)?;
    write(dir, "rounds.csv", run.log.to_csv())?;
    write(dir, "timing.csv", run.log.timing_csv())?;
    write(dir, "model.ckpt", run.model_checkpoint()?)?;
    let mut summary = format!(
        "method = {}\npartition = {}\nrounds = {}\nbest_top1 = {}\nfinal_top1 = {}\n",
        cfg.method_name(),
        env.manifest.spec.method,
        run.log.len(),
        best_top1(&run.log)?,
        run.log.records().last().map_or(0.0, |r| r.top1),
    );
    if let Some(ck) = &run.agent {
        write(dir, "agent.ckpt", encode_agent(&ck.agent, &ck.normalizer)?)?;
        write(dir, "experiences.bin", encode_experiences(ck.agent.k(), ck.agent.buffer.items())?)?;
        let reward = if cfg.agent.negate_reward { "negated" } else { "loss-like" };
        summary.push_str(&format!("reward_sign = {reward}\nexperiences = {}\n", ck.agent.buffer.len()));
    }
    if let Some(ts) = &run.two_stage {
        for w in &ts.workers {
            write(dir, &format!("worker{}_rounds.csv", w.worker), w.log.to_csv())?;
        }
    }
    write(dir, "summary.txt", summary)
}
