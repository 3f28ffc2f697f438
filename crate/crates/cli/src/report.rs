use std::path::{Path, PathBuf};

use feddrl_data::PartitionManifest;
use feddrl_metrics::{
    accuracy_curves_csv, common_target, loss_ratio_csv, rounds_to_target, runs_csv, summary_table,
    timing_table_csv, RunLog, RunSummary, CANDIDATE,
};
use feddrl_nn::Network;

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

/// A finished run read back from its directory.
#[derive(Clone, Debug)]
pub struct LoadedRun {
    pub name: String,
    pub dir: PathBuf,
    pub method: String,
    /// Partition label, e.g. `CE(0.6)` for clustered methods.
    pub partition: String,
    pub log: RunLog,
    pub params: usize,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn partition_label(m: &PartitionManifest) -> String {
    if m.spec.method.is_clustered() {
        format!("{}({})", m.spec.method, m.spec.delta)
    } else {
        m.spec.method.to_string()
    }
}

pub fn load_run(dir: &Path) -> Result<LoadedRun> {
    let cfg = ExperimentConfig::from_toml(&read(&dir.join("config.toml"))?, &[])?;
    let manifest = PartitionManifest::load(&dir.join("manifest.txt"))?;
    let timing = dir.join("timing.csv");
    let timing = if timing.exists() { Some(read(&timing)?) } else { None };
    let log = RunLog::from_csv(&read(&dir.join("rounds.csv"))?, timing.as_deref())?;
    let ckpt = dir.join("model.ckpt");
    let bytes = std::fs::read(&ckpt).map_err(|e| CliError::io(&ckpt, e))?;
    let params = Network::from_checkpoint_bytes(&bytes)?.param_count();
    let name = dir
        .file_name()
        .map_or_else(|| dir.display().to_string(), |n| n.to_string_lossy().into_owned());
    Ok(LoadedRun {
        name,
        dir: dir.to_path_buf(),
        method: cfg.method_name(),
        partition: partition_label(&manifest),
        log,
        params,
    })
}

/// Text and CSV outputs of a comparison, keyed by file name.
pub fn build_report(runs: &[LoadedRun], target: Option<f64>, window: usize) -> Result<Vec<(String, String)>> {
    if runs.is_empty() {
        return Err(CliError::Config("report needs at least one run".into()));
    }
    let logs: Vec<&RunLog> = runs.iter().map(|r| &r.log).collect();
    let target = match target {
        Some(t) => t,
        None => common_target(&logs)?,
    };
    let mut summaries = Vec::with_capacity(runs.len());
    for r in runs {
        let mut s = RunSummary::new(&r.name, &r.method, &r.partition, &r.log)?;
        s.rounds_to_target = rounds_to_target(&r.log, target)?;
        summaries.push(s);
    }
    let mut summary = summary_table(&summaries)?;
    summary.push_str(&format!("\nrounds to reach top-1 {target:.4}:\n"));
    for s in &summaries {
        let r = s.rounds_to_target.map_or("-".to_string(), |r| r.to_string());
        summary.push_str(&format!("{:<24} {r}\n", s.name));
    }

    let named: Vec<(&str, &RunLog)> = runs.iter().map(|r| (r.name.as_str(), &r.log)).collect();
    let mut out = vec![
        ("summary.txt".to_string(), summary),
        ("runs.csv".to_string(), runs_csv(&summaries)),
        ("accuracy_curves.csv".to_string(), accuracy_curves_csv(&named, window)?),
        (
            "timing.csv".to_string(),
            timing_table_csv(
                &runs
                    .iter()
                    .map(|r| (r.name.as_str(), &r.log, r.params))
                    .collect::<Vec<_>>(),
            ),
        ),
    ];
    // loss ratios against the first candidate run, over runs with the same rounds
    if let Some(reference) = runs.iter().find(|r| r.method == CANDIDATE) {
        let same: Vec<(&str, &RunLog)> = named
            .iter()
            .copied()
            .filter(|(_, l)| l.rounds() == reference.log.rounds())
            .collect();
        out.push(("loss_ratio.csv".to_string(), loss_ratio_csv(&same, &reference.log)?));
    }
    Ok(out)
}

pub fn write_report(out_dir: &Path, files: &[(String, String)]) -> Result<()> {
    crate::experiment::create_dir(out_dir)?;
    for (name, text) in files {
        let path = out_dir.join(name);
        std::fs::write(&path, text).map_err(|e| CliError::io(path, e))?;
    }
    Ok(())
}
