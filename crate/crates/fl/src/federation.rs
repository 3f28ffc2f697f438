use std::sync::Arc;
use std::time::Instant;

use feddrl_data::{Dataset, PartitionManifest};
use feddrl_metrics::{RoundRecord, RunLog};
use feddrl_nn::{LayerSpec, ModelParams, Network};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::aggregate::{aggregate_weighted, fedavg_impacts, ClientReport, ImpactVector};
use crate::client::{client_update, evaluate_top1, ClientData};
use crate::config::RoundConfig;
use crate::error::{FlError, Result};

/// Independent random streams derived from the run seed, so that e.g. an
/// agent drawing random numbers never perturbs client sampling or training.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    ModelInit = 1,
    Sampling = 2,
    Training = 3,
    Agent = 4,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for `stream`, further keyed by `parts` (round, client, ...).
pub fn stream_seed(seed: u64, stream: Stream, parts: &[u64]) -> u64 {
    let mut h = splitmix(seed ^ splitmix(stream as u64));
    for &p in parts {
        h = splitmix(h ^ p);
    }
    h
}

pub fn stream_rng(seed: u64, stream: Stream, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(seed, stream, parts))
}

/// Server-side rule turning the round's reports into impact factors.
pub trait ImpactPolicy {
    /// Impact factors for the reports of `round` (1-based), in slot order.
    /// Timed as the impact-computation phase.
    fn impacts(&mut self, round: usize, reports: &[ClientReport]) -> Result<ImpactVector>;

    /// Learning phase after aggregation; not included in the timing.
    fn learn(&mut self, _round: usize) -> Result<()> {
        Ok(())
    }
}

/// `α_k = n_k / n`; used by FedAvg and FedProx.
#[derive(Clone, Copy, Debug, Default)]
pub struct FedAvgPolicy;

impl ImpactPolicy for FedAvgPolicy {
    fn impacts(&mut self, _round: usize, reports: &[ClientReport]) -> Result<ImpactVector> {
        fedavg_impacts(reports)
    }
}

/// Result of one communication round.
#[derive(Clone, Debug)]
pub struct RoundOutcome {
    pub round: usize,
    pub clients: Vec<usize>,
    pub reports: Vec<ClientReport>,
    pub impacts: ImpactVector,
    pub global: ModelParams,
    pub top1: f64,
}

/// The simulated server with its clients.
pub struct Federation {
    cfg: RoundConfig,
    template: Network,
    global: ModelParams,
    clients: Arc<Vec<ClientData>>,
    test: Arc<ClientData>,
    sampler: ChaCha8Rng,
    round: usize,
    log: RunLog,
}

impl Federation {
    /// Builds the clients from a validated manifest and initializes the
    /// global model from the run seed.
    pub fn new(
        specs: Vec<LayerSpec>,
        train: &Dataset,
        test: &Dataset,
        manifest: &PartitionManifest,
        cfg: RoundConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        manifest.validate_against(train)?;
        if manifest.client_count() != cfg.total_clients {
            return Err(FlError::Config(format!(
                "manifest has {} clients, config N = {}",
                manifest.client_count(),
                cfg.total_clients
            )));
        }
        if test.is_empty() {
            return Err(FlError::Config("empty test set".into()));
        }
        let clients = manifest
            .assignments
            .iter()
            .enumerate()
            .map(|(k, idx)| ClientData::gather(k, train, idx))
            .collect();
        Self::from_parts(specs, Arc::new(clients), Arc::new(ClientData::from_dataset(test)), cfg)
    }

    /// Like [`Federation::new`] with pre-gathered client shards, which can be
    /// shared between federations.
    pub fn from_parts(
        specs: Vec<LayerSpec>,
        clients: Arc<Vec<ClientData>>,
        test: Arc<ClientData>,
        cfg: RoundConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        if clients.len() != cfg.total_clients {
            return Err(FlError::Config(format!(
                "{} client shards, config N = {}",
                clients.len(),
                cfg.total_clients
            )));
        }
        if let Some(c) = clients.iter().find(|c| c.is_empty()) {
            return Err(FlError::Config(format!("client {} has an empty shard", c.client_id)));
        }
        let template = Network::new(specs, &mut stream_rng(cfg.seed, Stream::ModelInit, &[]))?;
        if let Some(c) = clients.first() {
            if c.feature_dim != template.input_width() {
                return Err(FlError::Config(format!(
                    "model expects {} inputs, data has {}",
                    template.input_width(),
                    c.feature_dim
                )));
            }
        }
        Ok(Self {
            global: template.export_params(),
            sampler: stream_rng(cfg.seed, Stream::Sampling, &[]),
            cfg,
            template,
            clients,
            test,
            round: 0,
            log: RunLog::new(),
        })
    }

    pub fn config(&self) -> &RoundConfig {
        &self.cfg
    }

    pub fn global(&self) -> &ModelParams {
        &self.global
    }

    /// A network holding the current global parameters.
    pub fn global_network(&self) -> Network {
        let mut net = self.template.clone();
        net.set_params(&self.global).expect("global params match the template");
        net
    }

    pub fn clients(&self) -> &[ClientData] {
        &self.clients
    }

    pub fn shared_clients(&self) -> Arc<Vec<ClientData>> {
        Arc::clone(&self.clients)
    }

    pub fn shared_test(&self) -> Arc<ClientData> {
        Arc::clone(&self.test)
    }

    pub fn specs(&self) -> &[LayerSpec] {
        self.template.specs()
    }

    /// Completed rounds.
    pub fn round(&self) -> usize {
        self.round
    }

    pub fn log(&self) -> &RunLog {
        &self.log
    }

    pub fn into_log(self) -> RunLog {
        self.log
    }

    /// K distinct client ids, uniformly without replacement, in sampling order.
    fn sample_clients(&mut self) -> Vec<usize> {
        rand::seq::index::sample(&mut self.sampler, self.cfg.total_clients, self.cfg.participants)
            .into_vec()
    }

    /// Broadcast, local training on every sampled client (in parallel),
    /// impact computation, aggregation, evaluation.
    pub fn run_round(&mut self, policy: &mut dyn ImpactPolicy) -> Result<RoundOutcome> {
        let round = self.round + 1;
        let clients = self.sample_clients();
        let sgd = self.cfg.local_sgd();
        let seed = self.cfg.seed;
        let reports: Vec<ClientReport> = clients
            .par_iter()
            .map(|&k| {
                let mut rng = stream_rng(seed, Stream::Training, &[round as u64, k as u64]);
                client_update(&self.template, &self.global, &self.clients[k], &sgd, &mut rng)
            })
            .collect::<Result<_>>()?;
        for r in &reports {
            r.validate()?;
        }

        let t0 = Instant::now();
        let impacts = policy.impacts(round, &reports)?;
        let impact_secs = t0.elapsed().as_secs_f64();
        if impacts.len() != reports.len() {
            return Err(FlError::Policy(format!(
                "{} impact factors for {} reports",
                impacts.len(),
                reports.len()
            )));
        }
        let t1 = Instant::now();
        let global = aggregate_weighted(&reports, &impacts)?;
        let aggregation_secs = t1.elapsed().as_secs_f64();
        policy.learn(round)?;

        self.global = global;
        self.round = round;
        let top1 = evaluate_top1(&self.global_network(), &self.test)?;
        self.log.push(RoundRecord {
            round,
            top1,
            clients: clients.clone(),
            losses_before: reports.iter().map(|r| r.loss_before).collect(),
            losses_after: reports.iter().map(|r| r.loss_after).collect(),
            impacts: impacts.as_slice().to_vec(),
            impact_secs,
            aggregation_secs,
        })?;
        Ok(RoundOutcome {
            round,
            clients,
            reports,
            impacts,
            global: self.global.clone(),
            top1,
        })
    }

    /// Runs until `max_rounds` rounds are complete.
    pub fn run(&mut self, policy: &mut dyn ImpactPolicy) -> Result<&RunLog> {
        while self.round < self.cfg.max_rounds {
            self.run_round(policy)?;
        }
        Ok(&self.log)
    }
}
