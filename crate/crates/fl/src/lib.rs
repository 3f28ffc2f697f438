//! Synchronous federated learning: clients evaluate the broadcast model,
//! train locally, and report; the server aggregates with impact factors from
//! a pluggable policy.

mod aggregate;
mod client;
mod config;
mod error;
mod federation;

pub use aggregate::{aggregate_weighted, fedavg_impacts, ClientReport, ImpactVector, IMPACT_SUM_TOL};
pub use client::{argmax, client_update, evaluate_top1, inference_loss, local_train, ClientData};
pub use config::{AggregatorKind, RoundConfig};
pub use error::{FlError, Result};
pub use federation::{
    stream_rng, stream_seed, FedAvgPolicy, Federation, ImpactPolicy, RoundOutcome, Stream,
};
