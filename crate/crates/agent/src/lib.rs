//! DDPG agent that picks per-client aggregation weights from the round's
//! losses and sample counts, trained with TD-prioritized replay, either
//! online or in two stages (parallel workers, then offline on their merged
//! experience).

mod action;
mod agent;
mod codec;
mod config;
mod error;
mod policy;
mod replay;
mod state;
mod two_stage;

pub use action::{
    action_map_backward, constrain, impacts_from_action, select_action, sigma_clamped, sigmoid,
    softplus, stable_softmax, AggAction, MAX_LOGIT_GAP,
};
pub use agent::{policy_specs, soft_update, value_specs, DdpgAgent, UpdateStats};
pub use codec::{
    decode_agent, decode_experiences, encode_agent, encode_experiences, load_agent, save_agent,
    AgentCheckpoint, AGENT_MAGIC, EXPERIENCE_MAGIC, MAX_K,
};
pub use config::AgentConfig;
pub use error::{AgentError, Result};
pub use policy::{FedDrlPolicy, ImpactOverride};
pub use replay::{compute_reward, loss_objective, Experience, ReplayBuffer};
pub use state::{build_state, AggState, StateNormalizer};
pub use two_stage::{two_stage_train, TwoStageOutcome, WorkerRun};
