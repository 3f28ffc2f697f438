//! Experiment plumbing behind the `feddrl` binary: TOML configs with
//! command-line overrides, dataset loading, partitioning, runs, sweeps and
//! comparison reports.

pub mod config;
pub mod error;
pub mod experiment;
pub mod report;
pub mod sweep;

pub use config::{AgentMode, DatasetConfig, DatasetKind, ExperimentConfig, FedDrlConfig, ModelConfig};
pub use error::{CliError, Result, EXIT_CONFIG, EXIT_RUNTIME};
pub use experiment::{
    build_environment, build_manifest, load_datasets, model_specs, run_experiment, write_partition,
    write_run, Environment, RunArtifacts,
};
pub use report::{build_report, load_run, partition_label, write_report, LoadedRun};
pub use sweep::{point_name, sweep_points};

use std::path::{Path, PathBuf};

/// Builds the environment, runs, and writes everything under `cfg.output_dir`.
pub fn run_to_dir(cfg: &ExperimentConfig) -> Result<RunArtifacts> {
    let env = build_environment(cfg)?;
    let run = run_experiment(cfg, &env)?;
    write_run(&cfg.output_dir, cfg, &env, &run)?;
    Ok(run)
}

/// One run per sweep point, each in `cfg.output_dir/<point>`, then a
/// report over all of them in `cfg.output_dir/report`.
pub fn sweep(config_text: &str, overrides: &[String], axes: &[String]) -> Result<Vec<PathBuf>> {
    let base = ExperimentConfig::from_toml(config_text, overrides)?;
    let points = sweep_points(axes)?;
    // validate every point before running any
    let mut cfgs = Vec::with_capacity(points.len());
    for p in &points {
        let mut o = overrides.to_vec();
        o.extend(p.iter().cloned());
        let mut cfg = ExperimentConfig::from_toml(config_text, &o)?;
        cfg.output_dir = base.output_dir.join(point_name(p));
        cfgs.push(cfg);
    }
    let mut dirs = Vec::with_capacity(cfgs.len());
    for cfg in &cfgs {
        run_to_dir(cfg)?;
        dirs.push(cfg.output_dir.clone());
    }
    let runs = dirs.iter().map(|d| load_run(d)).collect::<Result<Vec<_>>>()?;
    write_report(&base.output_dir.join("report"), &build_report(&runs, None, 10)?)?;
    Ok(dirs)
}

/// Reads a config file, or returns the defaults when `path` is `None`.
pub fn read_config_text(path: Option<&Path>) -> Result<String> {
    match path {
        Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::io(p, e)),
        None => Ok(String::new()),
    }
}
