use std::fmt::Write as _;

use crate::partition::PartitionManifest;

/// Per-partition statistics: sample totals, mean and population STD of
/// samples per client, and the per-client label histogram.
#[derive(Clone, Debug, PartialEq)]
pub struct StatsReport {
    pub total_samples: usize,
    pub clients: usize,
    pub mean: f64,
    pub std: f64,
    pub counts: Vec<usize>,
    pub histograms: Vec<Vec<usize>>,
    pub groups: Option<Vec<usize>>,
}

/// Mean and population standard deviation.
pub fn mean_std(counts: &[usize]) -> (f64, f64) {
    if counts.is_empty() {
        return (0.0, 0.0);
    }
    let n = counts.len() as f64;
    let mean = counts.iter().sum::<usize>() as f64 / n;
    let var = counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn partition_stats(m: &PartitionManifest) -> StatsReport {
    let counts = m.sample_counts();
    let (mean, std) = mean_std(&counts);
    StatsReport {
        total_samples: counts.iter().sum(),
        clients: counts.len(),
        mean,
        std,
        counts,
        histograms: m.histograms.clone(),
        groups: m.groups.clone(),
    }
}

impl StatsReport {
    /// One row per client: `client,group,samples,label_0,...`.
    pub fn to_csv(&self) -> String {
        let classes = self.histograms.first().map_or(0, Vec::len);
        let mut out = String::from("client,group,samples");
        for l in 0..classes {
            let _ = write!(out, ",label_{l}");
        }
        out.push('\n');
        for (k, h) in self.histograms.iter().enumerate() {
            let group = self
                .groups
                .as_ref()
                .map_or(String::new(), |g| g[k].to_string());
            let _ = write!(out, "{k},{group},{}", self.counts[k]);
            for c in h {
                let _ = write!(out, ",{c}");
            }
            out.push('\n');
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        format!(
            "total_samples,clients,mean,std\n{},{},{},{}\n",
            self.total_samples, self.clients, self.mean, self.std
        )
    }
}
