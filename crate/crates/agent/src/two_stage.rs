use feddrl_fl::{Federation, FlError};
use feddrl_metrics::RunLog;
use rayon::prelude::*;

use crate::agent::{DdpgAgent, UpdateStats};
use crate::config::AgentConfig;
use crate::error::{AgentError, Result};
use crate::policy::FedDrlPolicy;
use crate::replay::ReplayBuffer;

/// One stage-1 worker after its online run.
#[derive(Clone, Debug)]
pub struct WorkerRun {
    pub worker: usize,
    pub log: RunLog,
    pub agent: DdpgAgent,
}

#[derive(Clone, Debug)]
pub struct TwoStageOutcome {
    pub main: DdpgAgent,
    pub workers: Vec<WorkerRun>,
    pub offline: Vec<UpdateStats>,
}

/// Stage 1: `cfg.workers` agents with identical initial networks run the
/// online loop, in parallel, each on `make_env(worker)`. Stage 2: their
/// buffers are merged and the main agent, starting from worker 0's
/// networks, runs `cfg.offline_updates` updates on the merged buffer.
pub fn two_stage_train<F>(make_env: F, cfg: &AgentConfig, k: usize) -> Result<TwoStageOutcome>
where
    F: Fn(usize) -> std::result::Result<Federation, FlError> + Sync,
{
    cfg.validate()?;
    let template = DdpgAgent::new(k, cfg.clone(), 0)?;
    let workers: Vec<WorkerRun> = (0..cfg.workers)
        .into_par_iter()
        .map(|w| {
            let mut fed = make_env(w)?;
            let mut agent = template.clone();
            agent.reseed_sampler(w as u64);
            if agent.cfg.noise_decay_rounds == 0 {
                agent.cfg.noise_decay_rounds = fed.config().max_rounds;
            }
            let mut policy = FedDrlPolicy::new(agent, w as u64);
            fed.run(&mut policy)?;
            Ok(WorkerRun {
                worker: w,
                log: fed.into_log(),
                agent: policy.into_agent(),
            })
        })
        .collect::<Result<_>>()?;

    let buffers: Vec<ReplayBuffer> = workers.iter().map(|w| w.agent.buffer.clone()).collect();
    let merged = ReplayBuffer::merge(&buffers, cfg.buffer_capacity);
    if merged.is_empty() {
        return Err(AgentError::EmptyBuffer);
    }
    let mut main = workers[0].agent.clone();
    main.buffer = merged;
    main.reseed_sampler(cfg.workers as u64);

    let mut offline = Vec::new();
    let mut left = cfg.offline_updates;
    let chunk = cfg.updates_per_round.max(1);
    while left > 0 {
        let n = left.min(chunk);
        offline.push(main.ddpg_update(n)?);
        left -= n;
    }
    Ok(TwoStageOutcome {
        main,
        workers,
        offline,
    })
}
