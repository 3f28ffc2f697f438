//! Plot-ready CSV tables and the plain-text comparison summary.

use std::fmt::Write as _;

use crate::error::{MetricsError, Result};
use crate::log::RunLog;
use crate::ops::{best_top1, improvements, loss_stats_normalized, mean_timing_ms, smooth};

/// Name of the method whose improvement over the others is reported.
pub const CANDIDATE: &str = "feddrl";

/// One run's identity within a comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub name: String,
    pub method: String,
    pub partition: String,
    pub best_top1: f64,
    pub rounds_to_target: Option<usize>,
    pub impact_ms: f64,
    pub aggregation_ms: f64,
}

impl RunSummary {
    pub fn new(name: &str, method: &str, partition: &str, log: &RunLog) -> Result<Self> {
        let (impact_ms, aggregation_ms) = mean_timing_ms(log)?;
        Ok(Self {
            name: name.to_string(),
            method: method.to_string(),
            partition: partition.to_string(),
            best_top1: best_top1(log)?,
            rounds_to_target: None,
            impact_ms,
            aggregation_ms,
        })
    }
}

fn first_seen<'a>(items: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
    let mut out: Vec<&str> = Vec::new();
    for s in items {
        if !out.contains(&s) {
            out.push(s);
        }
    }
    out
}

/// Mean best top-1 (in percent) of the runs matching `method` and `partition`.
fn cell(runs: &[RunSummary], method: &str, partition: &str) -> Option<f64> {
    let v: Vec<f64> = runs
        .iter()
        .filter(|r| r.method == method && r.partition == partition)
        .map(|r| r.best_top1 * 100.0)
        .collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Methods as rows, partitions as columns, best top-1 in percent averaged
/// over seeds; impr.(a)/impr.(b) rows when the candidate and at least one
/// baseline are present.
pub fn summary_table(runs: &[RunSummary]) -> Result<String> {
    if runs.is_empty() {
        return Err(MetricsError::Empty("runs"));
    }
    let partitions = first_seen(runs.iter().map(|r| r.partition.as_str()));
    let mut methods = first_seen(runs.iter().map(|r| r.method.as_str()));
    // candidate last, like the baselines-then-proposal layout
    methods.sort_by_key(|m| *m == CANDIDATE);
    let width = partitions.iter().map(|p| p.len()).max().unwrap_or(0).max(8);
    let mut out = String::new();
    let _ = write!(out, "{:<10}", "method");
    for p in &partitions {
        let _ = write!(out, " {p:>width$}");
    }
    out.push('\n');
    for m in &methods {
        let _ = write!(out, "{m:<10}");
        for p in &partitions {
            match cell(runs, m, p) {
                Some(v) => {
                    let _ = write!(out, " {v:>width$.2}");
                }
                None => {
                    let _ = write!(out, " {:>width$}", "-");
                }
            }
        }
        out.push('\n');
    }
    let baselines: Vec<&str> = methods.iter().copied().filter(|m| *m != CANDIDATE).collect();
    if methods.contains(&CANDIDATE) && !baselines.is_empty() {
        for (label, pick_best) in [("impr.(a)", true), ("impr.(b)", false)] {
            let _ = write!(out, "{label:<10}");
            for p in &partitions {
                let base: Vec<f64> = baselines.iter().filter_map(|b| cell(runs, b, p)).collect();
                match (cell(runs, CANDIDATE, p), base.is_empty()) {
                    (Some(c), false) => {
                        let (a, b) = improvements(c, &base)?;
                        let v = format!("{:.2}%", if pick_best { a } else { b });
                        let _ = write!(out, " {v:>width$}");
                    }
                    _ => {
                        let _ = write!(out, " {:>width$}", "-");
                    }
                }
            }
            out.push('\n');
        }
    }
    Ok(out)
}

/// Per-run table: best top-1, rounds to target, mean timings.
pub fn runs_csv(runs: &[RunSummary]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "run",
        "method",
        "partition",
        "best_top1",
        "rounds_to_target",
        "impact_ms",
        "aggregation_ms",
    ])
    .expect("in-memory write");
    for r in runs {
        w.write_record([
            r.name.clone(),
            r.method.clone(),
            r.partition.clone(),
            r.best_top1.to_string(),
            r.rounds_to_target.map_or(String::new(), |x| x.to_string()),
            r.impact_ms.to_string(),
            r.aggregation_ms.to_string(),
        ])
        .expect("in-memory write");
    }
    into_string(w)
}

/// Block-smoothed top-1 curves, one column per run.
pub fn accuracy_curves_csv(runs: &[(&str, &RunLog)], window: usize) -> Result<String> {
    let curves = runs
        .iter()
        .map(|(_, l)| smooth(&l.top1_series(), window))
        .collect::<Result<Vec<_>>>()?;
    let blocks = curves.iter().map(Vec::len).max().unwrap_or(0);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["block_end_round".to_string()];
    header.extend(runs.iter().map(|(n, _)| n.to_string()));
    w.write_record(&header).expect("in-memory write");
    for b in 0..blocks {
        let mut row = vec![((b + 1) * window).to_string()];
        row.extend(
            curves
                .iter()
                .map(|c| c.get(b).map_or(String::new(), f64::to_string)),
        );
        w.write_record(&row).expect("in-memory write");
    }
    Ok(into_string(w))
}

/// Loss mean/variance of each run normalized to `reference`, per round.
pub fn loss_ratio_csv(runs: &[(&str, &RunLog)], reference: &RunLog) -> Result<String> {
    let ratios = runs
        .iter()
        .map(|(_, l)| loss_stats_normalized(l, reference))
        .collect::<Result<Vec<_>>>()?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["round".to_string()];
    for (n, _) in runs {
        header.push(format!("{n}_mean_ratio"));
        header.push(format!("{n}_var_ratio"));
    }
    w.write_record(&header).expect("in-memory write");
    for (i, r) in reference.records().iter().enumerate() {
        let mut row = vec![r.round.to_string()];
        for rs in &ratios {
            row.push(rs[i].mean_ratio.to_string());
            row.push(rs[i].var_ratio.to_string());
        }
        w.write_record(&row).expect("in-memory write");
    }
    Ok(into_string(w))
}

/// Per-round wall-clock timings (milliseconds) together with model size, for
/// checking that aggregation scales with parameter count.
pub fn timing_table_csv(runs: &[(&str, &RunLog, usize)]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["run", "params", "round", "impact_ms", "aggregation_ms"])
        .expect("in-memory write");
    for (name, log, params) in runs {
        for r in log.records() {
            w.write_record([
                name.to_string(),
                params.to_string(),
                r.round.to_string(),
                (r.impact_secs * 1e3).to_string(),
                (r.aggregation_secs * 1e3).to_string(),
            ])
            .expect("in-memory write");
        }
    }
    into_string(w)
}

fn into_string(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
}
