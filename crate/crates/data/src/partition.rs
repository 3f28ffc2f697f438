//! Non-IID partitioners.
//!
//! * `PA`: every client holds `labels_per_client` labels; each label's samples
//!   are split among its holders with Pareto-distributed weights.
//! * `CE` / `CN` (cluster skew): labels are chunked into disjoint clusters, one
//!   per client group; the main group holds `round(delta·N)` clients. CE gives
//!   every client the same number of samples, CN draws unbalanced quantities.
//! * `Equal` / `NonEqual`: the label-sorted dataset is cut into `2N` (resp.
//!   `10N`) shards; clients get 2 shards (resp. a random count in `[6, 14]`).

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Pareto};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{DataError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PartitionMethod {
    #[serde(rename = "PA")]
    Pareto,
    #[serde(rename = "CE")]
    ClusteredEqual,
    #[serde(rename = "CN")]
    ClusteredNonEqual,
    Equal,
    NonEqual,
}

impl PartitionMethod {
    pub const ALL: [PartitionMethod; 5] = [
        PartitionMethod::Pareto,
        PartitionMethod::ClusteredEqual,
        PartitionMethod::ClusteredNonEqual,
        PartitionMethod::Equal,
        PartitionMethod::NonEqual,
    ];

    pub fn is_clustered(self) -> bool {
        matches!(
            self,
            PartitionMethod::ClusteredEqual | PartitionMethod::ClusteredNonEqual
        )
    }
}

impl fmt::Display for PartitionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PartitionMethod::Pareto => "PA",
            PartitionMethod::ClusteredEqual => "CE",
            PartitionMethod::ClusteredNonEqual => "CN",
            PartitionMethod::Equal => "Equal",
            PartitionMethod::NonEqual => "NonEqual",
        })
    }
}

impl FromStr for PartitionMethod {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "pa" | "pareto" => PartitionMethod::Pareto,
            "ce" | "clustered-equal" => PartitionMethod::ClusteredEqual,
            "cn" | "clustered-non-equal" => PartitionMethod::ClusteredNonEqual,
            "equal" => PartitionMethod::Equal,
            "nonequal" | "non-equal" => PartitionMethod::NonEqual,
            _ => return Err(DataError::Spec(format!("unknown partition method {s:?}"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartitionSpec {
    pub method: PartitionMethod,
    pub clients: usize,
    /// Fraction of clients in the main group (CE/CN).
    pub delta: f64,
    pub labels_per_client: usize,
    /// Number of client groups / label clusters (CE/CN).
    pub groups: usize,
    /// Pareto shape of the per-client weights (PA).
    pub pareto_shape: f64,
    /// Minimum samples per client (PA).
    pub min_samples: usize,
    /// Range of the log-uniform quantity factors (CN).
    pub cn_min_factor: f64,
    pub cn_max_factor: f64,
    pub seed: u64,
}

impl Default for PartitionSpec {
    fn default() -> Self {
        Self {
            method: PartitionMethod::ClusteredEqual,
            clients: 10,
            delta: 0.6,
            labels_per_client: 2,
            groups: 3,
            pareto_shape: 1.5,
            min_samples: 10,
            cn_min_factor: 0.3,
            cn_max_factor: 3.0,
            seed: 0,
        }
    }
}

impl PartitionSpec {
    /// `round(delta·N)`.
    pub fn main_group_size(&self) -> usize {
        (self.delta * self.clients as f64).round() as usize
    }

    pub fn validate(&self, class_count: usize) -> Result<()> {
        let spec_err = |m: String| Err(DataError::Spec(m));
        if self.clients == 0 {
            return spec_err("clients must be >= 1".into());
        }
        if self.labels_per_client == 0 || self.labels_per_client > class_count {
            return spec_err(format!(
                "labels_per_client must be in 1..={class_count}, got {}",
                self.labels_per_client
            ));
        }
        match self.method {
            PartitionMethod::Pareto => {
                if !(self.pareto_shape.is_finite() && self.pareto_shape > 0.0) {
                    return spec_err(format!("pareto_shape must be > 0, got {}", self.pareto_shape));
                }
            }
            PartitionMethod::ClusteredEqual | PartitionMethod::ClusteredNonEqual => {
                if !(self.delta > 0.0 && self.delta <= 1.0) {
                    return spec_err(format!("delta must be in (0, 1], got {}", self.delta));
                }
                let main = self.main_group_size();
                if main == 0 {
                    return spec_err(format!(
                        "delta·N = {} rounds to 0",
                        self.delta * self.clients as f64
                    ));
                }
                if self.groups == 0 || (main < self.clients && self.groups < 2) {
                    return spec_err(format!(
                        "{} groups cannot hold a main group of {main} out of {} clients",
                        self.groups, self.clients
                    ));
                }
                if class_count < self.groups * self.labels_per_client {
                    return Err(DataError::Clusters(format!(
                        "{class_count} classes < {} groups x {} labels per client",
                        self.groups, self.labels_per_client
                    )));
                }
                if !(self.cn_min_factor > 0.0 && self.cn_max_factor >= self.cn_min_factor) {
                    return spec_err("CN factor range must satisfy 0 < min <= max".into());
                }
            }
            PartitionMethod::Equal | PartitionMethod::NonEqual => {}
        }
        Ok(())
    }
}

/// Assignment of training-sample indices to clients.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionManifest {
    pub spec: PartitionSpec,
    pub class_count: usize,
    pub dataset_len: usize,
    pub assignments: Vec<Vec<usize>>,
    pub histograms: Vec<Vec<usize>>,
    /// Group of each client (CE/CN only; group 0 is the main group).
    pub groups: Option<Vec<usize>>,
}

impl PartitionManifest {
    pub fn client_count(&self) -> usize {
        self.assignments.len()
    }

    pub fn sample_counts(&self) -> Vec<usize> {
        self.assignments.iter().map(Vec::len).collect()
    }

    /// Training indices held by no client, ascending.
    pub fn unassigned(&self) -> Vec<usize> {
        let mut used = vec![false; self.dataset_len];
        for &i in self.assignments.iter().flatten() {
            if i < used.len() {
                used[i] = true;
            }
        }
        (0..self.dataset_len).filter(|&i| !used[i]).collect()
    }

    /// Distinct labels held by each client.
    pub fn label_sets(&self) -> Vec<Vec<usize>> {
        self.histograms
            .iter()
            .map(|h| (0..h.len()).filter(|&l| h[l] > 0).collect())
            .collect()
    }

    /// Structural checks: indices in range, disjoint, every client non-empty,
    /// histograms consistent with counts.
    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(DataError::Manifest(m));
        if self.assignments.len() != self.spec.clients {
            return err(format!(
                "{} client rows for {} clients",
                self.assignments.len(),
                self.spec.clients
            ));
        }
        if self.histograms.len() != self.assignments.len() {
            return err("one histogram per client required".into());
        }
        let mut seen = vec![false; self.dataset_len];
        for (k, (idx, hist)) in self.assignments.iter().zip(&self.histograms).enumerate() {
            if idx.is_empty() {
                return err(format!("client {k} has no samples"));
            }
            if hist.len() != self.class_count || hist.iter().sum::<usize>() != idx.len() {
                return err(format!("client {k} histogram does not match its samples"));
            }
            for &i in idx {
                if i >= self.dataset_len {
                    return err(format!("client {k}: sample {i} out of range"));
                }
                if std::mem::replace(&mut seen[i], true) {
                    return err(format!("sample {i} assigned twice"));
                }
            }
        }
        if let Some(g) = &self.groups {
            if g.len() != self.assignments.len() {
                return err("one group id per client required".into());
            }
        }
        Ok(())
    }

    /// [`PartitionManifest::validate`] plus agreement with the dataset's labels.
    pub fn validate_against(&self, ds: &Dataset) -> Result<()> {
        if ds.len() != self.dataset_len || ds.class_count() != self.class_count {
            return Err(DataError::Manifest(format!(
                "manifest is for {} samples / {} classes, dataset has {} / {}",
                self.dataset_len,
                self.class_count,
                ds.len(),
                ds.class_count()
            )));
        }
        self.validate()?;
        for (k, (idx, hist)) in self.assignments.iter().zip(&self.histograms).enumerate() {
            if &ds.label_histogram(idx) != hist {
                return Err(DataError::Manifest(format!(
                    "client {k} histogram disagrees with dataset labels"
                )));
            }
        }
        Ok(())
    }
}

/// Dispatches on `spec.method`.
pub fn partition(ds: &Dataset, spec: &PartitionSpec) -> Result<PartitionManifest> {
    match spec.method {
        PartitionMethod::Pareto => partition_pareto(ds, spec),
        PartitionMethod::ClusteredEqual | PartitionMethod::ClusteredNonEqual => {
            partition_clustered(ds, spec)
        }
        PartitionMethod::Equal | PartitionMethod::NonEqual => partition_shards(ds, spec),
    }
}

/// Splits `total` into `weights.len()` parts: `min_each` apiece, the rest in
/// proportion to `weights` by largest remainder (ties to the lower index).
pub fn apportion(total: usize, weights: &[f64], min_each: usize) -> Vec<usize> {
    let n = weights.len();
    let rest = total - n * min_each;
    let sum: f64 = weights.iter().sum();
    let quotas: Vec<f64> = weights.iter().map(|w| rest as f64 * w / sum).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let given: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().take(rest.saturating_sub(given)) {
        counts[i] += 1;
    }
    counts.iter().map(|c| c + min_each).collect()
}

fn wrong_method(op: &str, m: PartitionMethod) -> DataError {
    DataError::Spec(format!("{op} cannot run method {m}"))
}

fn shuffled_classes(ds: &Dataset, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut by_label = ds.indices_by_label();
    for list in &mut by_label {
        list.shuffle(rng);
    }
    by_label
}

/// Gives each holder of each label its `count` next samples of that label.
fn deal_labels(
    client_labels: &[Vec<usize>],
    by_label: &[Vec<usize>],
    mut count_for: impl FnMut(usize, &[usize]) -> Result<Vec<usize>>,
) -> Result<Vec<Vec<usize>>> {
    let classes = by_label.len();
    let mut holders = vec![Vec::new(); classes];
    for (k, labels) in client_labels.iter().enumerate() {
        for &l in labels {
            holders[l].push(k);
        }
    }
    // per (label, holder position) counts, then cut each label's list in holder order
    let mut chunks: Vec<Vec<&[usize]>> = vec![Vec::new(); classes];
    for l in 0..classes {
        if holders[l].is_empty() {
            continue;
        }
        let counts = count_for(l, &holders[l])?;
        let mut start = 0;
        for c in counts {
            chunks[l].push(&by_label[l][start..start + c]);
            start += c;
        }
    }
    let mut cursor = vec![0usize; classes];
    Ok(client_labels
        .iter()
        .map(|labels| {
            let mut out = Vec::new();
            for &l in labels {
                out.extend_from_slice(chunks[l][cursor[l]]);
                cursor[l] += 1;
            }
            out
        })
        .collect())
}

fn finish(
    ds: &Dataset,
    spec: &PartitionSpec,
    assignments: Vec<Vec<usize>>,
    groups: Option<Vec<usize>>,
) -> Result<PartitionManifest> {
    let histograms = assignments.iter().map(|a| ds.label_histogram(a)).collect();
    let m = PartitionManifest {
        spec: spec.clone(),
        class_count: ds.class_count(),
        dataset_len: ds.len(),
        assignments,
        histograms,
        groups,
    };
    m.validate()?;
    Ok(m)
}

/// Labels held by client `k` under PA: `labels_per_client` consecutive classes
/// starting at `k mod C`.
pub fn pareto_labels(k: usize, labels_per_client: usize, classes: usize) -> Vec<usize> {
    (0..labels_per_client).map(|j| (k + j) % classes).collect()
}

pub fn partition_pareto(ds: &Dataset, spec: &PartitionSpec) -> Result<PartitionManifest> {
    if spec.method != PartitionMethod::Pareto {
        return Err(wrong_method("partition_pareto", spec.method));
    }
    spec.validate(ds.class_count())?;
    let classes = ds.class_count();
    let lpc = spec.labels_per_client;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let pareto = Pareto::new(1.0, spec.pareto_shape)
        .map_err(|e| DataError::Spec(format!("pareto: {e}")))?;
    let client_labels: Vec<Vec<usize>> = (0..spec.clients)
        .map(|k| pareto_labels(k, lpc, classes))
        .collect();
    // one weight per (client, held label), drawn in client order
    let weights: Vec<Vec<f64>> = (0..spec.clients)
        .map(|_| (0..lpc).map(|_| pareto.sample(&mut rng)).collect())
        .collect();
    let by_label = shuffled_classes(ds, &mut rng);
    let min_per_label = spec.min_samples.div_ceil(lpc).max(1);
    let assignments = deal_labels(&client_labels, &by_label, |l, holders| {
        let avail = by_label[l].len();
        if avail < holders.len() * min_per_label {
            return Err(DataError::TooFewSamples(format!(
                "label {l} has {avail} samples for {} holders needing {min_per_label} each",
                holders.len()
            )));
        }
        let w: Vec<f64> = holders
            .iter()
            .map(|&k| {
                let slot = client_labels[k].iter().position(|&x| x == l).expect("holder");
                weights[k][slot]
            })
            .collect();
        Ok(apportion(avail, &w, min_per_label))
    })?;
    finish(ds, spec, assignments, None)
}

/// Contiguous label clusters, one per group; the first `C mod G` clusters get
/// one extra label.
pub fn label_clusters(classes: usize, groups: usize) -> Vec<Vec<usize>> {
    let base = classes / groups;
    let extra = classes % groups;
    let mut next = 0;
    (0..groups)
        .map(|g| {
            let size = base + usize::from(g < extra);
            let c = (next..next + size).collect();
            next += size;
            c
        })
        .collect()
}

/// Group id of every client: the main group first, the remaining clients
/// spread as evenly as possible over the other groups.
pub fn group_layout(spec: &PartitionSpec) -> Vec<usize> {
    let main = spec.main_group_size();
    let mut group_of = vec![0; main];
    let rest = spec.clients - main;
    if spec.groups > 1 {
        let others = spec.groups - 1;
        for g in 0..others {
            let size = rest / others + usize::from(g < rest % others);
            group_of.extend(std::iter::repeat_n(g + 1, size));
        }
    }
    group_of
}

/// Label set of every client under CE/CN.
pub fn clustered_labels(spec: &PartitionSpec, classes: usize) -> (Vec<usize>, Vec<Vec<usize>>) {
    let clusters = label_clusters(classes, spec.groups);
    let group_of = group_layout(spec);
    let mut member = vec![0usize; spec.groups];
    let labels = group_of
        .iter()
        .map(|&g| {
            let cluster = &clusters[g];
            let j = member[g];
            member[g] += 1;
            (0..spec.labels_per_client)
                .map(|i| cluster[(j * spec.labels_per_client + i) % cluster.len()])
                .collect()
        })
        .collect();
    (group_of, labels)
}

/// Draws CN quantity factors, log-uniform in `[lo, hi]`, rescaled to mean 1.
pub fn cn_quantity_factors(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    let raw: Vec<f64> = (0..n).map(|_| (a + rng.random::<f64>() * (b - a)).exp()).collect();
    let mean = raw.iter().sum::<f64>() / n as f64;
    raw.into_iter().map(|f| f / mean).collect()
}

pub fn partition_clustered(ds: &Dataset, spec: &PartitionSpec) -> Result<PartitionManifest> {
    if !spec.method.is_clustered() {
        return Err(wrong_method("partition_clustered", spec.method));
    }
    spec.validate(ds.class_count())?;
    let (group_of, client_labels) = clustered_labels(spec, ds.class_count());
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let factors = (spec.method == PartitionMethod::ClusteredNonEqual).then(|| {
        cn_quantity_factors(&mut rng, spec.clients, spec.cn_min_factor, spec.cn_max_factor)
    });
    let by_label = shuffled_classes(ds, &mut rng);
    let assignments = match factors {
        None => {
            // CE: the same per-label share for everyone, limited by the most
            // contended label
            let mut holders = vec![0usize; ds.class_count()];
            for &l in client_labels.iter().flatten() {
                holders[l] += 1;
            }
            let share = (0..ds.class_count())
                .filter(|&l| holders[l] > 0)
                .map(|l| by_label[l].len() / holders[l])
                .min()
                .unwrap_or(0);
            if share == 0 {
                return Err(DataError::TooFewSamples(
                    "some label has fewer samples than holders".into(),
                ));
            }
            deal_labels(&client_labels, &by_label, |_, h| Ok(vec![share; h.len()]))?
        }
        Some(f) => deal_labels(&client_labels, &by_label, |l, holders| {
            let avail = by_label[l].len();
            if avail < holders.len() {
                return Err(DataError::TooFewSamples(format!(
                    "label {l} has {avail} samples for {} holders",
                    holders.len()
                )));
            }
            let w: Vec<f64> = holders.iter().map(|&k| f[k]).collect();
            Ok(apportion(avail, &w, 1))
        })?,
    };
    finish(ds, spec, assignments, Some(group_of))
}

/// `count` shard boundaries over `n` items; the first `n mod count` shards are one longer.
fn shard_ranges(n: usize, count: usize) -> Vec<std::ops::Range<usize>> {
    let base = n / count;
    let extra = n % count;
    let mut start = 0;
    (0..count)
        .map(|s| {
            let len = base + usize::from(s < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}

/// Shard counts in `[6, 14]` summing to `10·n`.
pub fn non_equal_shard_counts(rng: &mut impl Rng, n: usize) -> Vec<usize> {
    let mut counts: Vec<usize> = (0..n).map(|_| rng.random_range(6..=14)).collect();
    let target = 10 * n;
    loop {
        let sum: usize = counts.iter().sum();
        if sum == target {
            return counts;
        }
        let candidates: Vec<usize> = (0..n)
            .filter(|&k| if sum > target { counts[k] > 6 } else { counts[k] < 14 })
            .collect();
        let k = candidates[rng.random_range(0..candidates.len())];
        if sum > target {
            counts[k] -= 1;
        } else {
            counts[k] += 1;
        }
    }
}

pub fn partition_shards(ds: &Dataset, spec: &PartitionSpec) -> Result<PartitionManifest> {
    let per_client = match spec.method {
        PartitionMethod::Equal => 2,
        PartitionMethod::NonEqual => 10,
        m => return Err(wrong_method("partition_shards", m)),
    };
    spec.validate(ds.class_count())?;
    let shard_count = per_client * spec.clients;
    if ds.len() < shard_count {
        return Err(DataError::TooFewSamples(format!(
            "{} samples cannot fill {shard_count} shards",
            ds.len()
        )));
    }
    let mut sorted: Vec<usize> = (0..ds.len()).collect();
    sorted.sort_by_key(|&i| ds.label(i));
    let ranges = shard_ranges(ds.len(), shard_count);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let counts = if spec.method == PartitionMethod::Equal {
        vec![2; spec.clients]
    } else {
        non_equal_shard_counts(&mut rng, spec.clients)
    };
    let mut perm: Vec<usize> = (0..shard_count).collect();
    perm.shuffle(&mut rng);
    let mut offset = 0;
    let assignments = counts
        .iter()
        .map(|&c| {
            let mut mine = perm[offset..offset + c].to_vec();
            offset += c;
            mine.sort_unstable();
            mine.iter()
                .flat_map(|&s| sorted[ranges[s].clone()].iter().copied())
                .collect()
        })
        .collect();
    finish(ds, spec, assignments, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(per_class: usize, classes: usize) -> Dataset {
        let n = per_class * classes;
        let labels: Vec<usize> = (0..n).map(|i| (i * 7 + 3) % classes).collect();
        Dataset::new("toy", classes, 1, (0..n).map(|i| i as f64).collect(), labels).unwrap()
    }

    fn spec(method: PartitionMethod, clients: usize) -> PartitionSpec {
        PartitionSpec {
            method,
            clients,
            seed: 9,
            ..Default::default()
        }
    }

    #[test]
    fn apportion_conserves_and_respects_minimum() {
        let c = apportion(100, &[1.0, 2.0, 7.0], 5);
        assert_eq!(c.iter().sum::<usize>(), 100);
        assert!(c.iter().all(|&v| v >= 5));
        assert_eq!(c, vec![14, 22, 64]);
        assert_eq!(apportion(7, &[1.0], 1), vec![7]);
    }

    #[test]
    fn pareto_single_client_takes_its_labels_whole() {
        let ds = toy(50, 10);
        let m = partition_pareto(&ds, &spec(PartitionMethod::Pareto, 1)).unwrap();
        assert_eq!(m.histograms[0][0], 50);
        assert_eq!(m.histograms[0][1], 50);
        assert_eq!(m.histograms[0].iter().sum::<usize>(), 100);
    }

    #[test]
    fn pareto_gives_two_labels_each() {
        let ds = toy(100, 10);
        let m = partition_pareto(&ds, &spec(PartitionMethod::Pareto, 10)).unwrap();
        for labels in m.label_sets() {
            assert_eq!(labels.len(), 2);
        }
        assert!(m.sample_counts().iter().all(|&c| c >= 10));
    }

    #[test]
    fn pareto_too_few_samples() {
        let ds = toy(3, 10);
        assert!(matches!(
            partition_pareto(&ds, &spec(PartitionMethod::Pareto, 10)),
            Err(DataError::TooFewSamples(_))
        ));
    }

    #[test]
    fn main_group_size_is_rounded_delta_n() {
        let ds = toy(100, 10);
        let s = PartitionSpec {
            delta: 0.6,
            ..spec(PartitionMethod::ClusteredEqual, 10)
        };
        let m = partition_clustered(&ds, &s).unwrap();
        let groups = m.groups.unwrap();
        assert_eq!(groups.iter().filter(|&&g| g == 0).count(), 6);
        assert_eq!(groups, vec![0, 0, 0, 0, 0, 0, 1, 1, 2, 2]);
    }

    #[test]
    fn clusters_are_disjoint_label_sets() {
        assert_eq!(
            label_clusters(10, 3),
            vec![vec![0, 1, 2, 3], vec![4, 5, 6], vec![7, 8, 9]]
        );
        let s = spec(PartitionMethod::ClusteredEqual, 10);
        let (groups, labels) = clustered_labels(&s, 10);
        let clusters = label_clusters(10, 3);
        for (g, ls) in groups.iter().zip(&labels) {
            assert!(ls.iter().all(|l| clusters[*g].contains(l)));
        }
    }

    #[test]
    fn ce_counts_are_equal() {
        let ds = toy(97, 10);
        let m = partition_clustered(&ds, &spec(PartitionMethod::ClusteredEqual, 10)).unwrap();
        let c = m.sample_counts();
        assert!(c.iter().max().unwrap() - c.iter().min().unwrap() <= 1);
        assert!(m.label_sets().iter().all(|l| l.len() == 2));
    }

    #[test]
    fn cn_uses_every_held_sample() {
        let ds = toy(100, 10);
        let m = partition_clustered(&ds, &spec(PartitionMethod::ClusteredNonEqual, 10)).unwrap();
        assert!(m.unassigned().is_empty());
        assert!(m.label_sets().iter().all(|l| l.len() == 2));
        let c = m.sample_counts();
        assert!(c.iter().max() != c.iter().min());
    }

    #[test]
    fn too_many_groups_for_classes() {
        let ds = toy(10, 5);
        assert!(matches!(
            partition_clustered(&ds, &spec(PartitionMethod::ClusteredEqual, 10)),
            Err(DataError::Clusters(_))
        ));
    }

    #[test]
    fn delta_must_yield_a_main_group() {
        let ds = toy(100, 10);
        let s = PartitionSpec {
            delta: 0.01,
            ..spec(PartitionMethod::ClusteredEqual, 10)
        };
        assert!(matches!(partition_clustered(&ds, &s), Err(DataError::Spec(_))));
    }

    #[test]
    fn equal_shards() {
        let ds = toy(20, 10);
        let m = partition_shards(&ds, &spec(PartitionMethod::Equal, 10)).unwrap();
        assert!(m.sample_counts().iter().all(|&c| c == 20));
        assert!(m.unassigned().is_empty());
    }

    #[test]
    fn equal_single_client_owns_sorted_dataset() {
        let ds = toy(5, 4);
        let m = partition_shards(&ds, &spec(PartitionMethod::Equal, 1)).unwrap();
        let mut sorted: Vec<usize> = (0..ds.len()).collect();
        sorted.sort_by_key(|&i| ds.label(i));
        assert_eq!(m.assignments[0], sorted);
    }

    #[test]
    fn non_equal_counts_are_bounded_and_total_10n() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in [1, 2, 10, 100] {
            let c = non_equal_shard_counts(&mut rng, n);
            assert_eq!(c.iter().sum::<usize>(), 10 * n);
            assert!(c.iter().all(|&v| (6..=14).contains(&v)));
        }
    }

    #[test]
    fn shards_need_enough_samples() {
        let ds = toy(1, 10);
        assert!(partition_shards(&ds, &spec(PartitionMethod::NonEqual, 10)).is_err());
    }

    #[test]
    fn method_mismatch_is_rejected() {
        let ds = toy(10, 10);
        assert!(partition_shards(&ds, &spec(PartitionMethod::Pareto, 2)).is_err());
        assert!(partition_pareto(&ds, &spec(PartitionMethod::Equal, 2)).is_err());
        assert!(partition_clustered(&ds, &spec(PartitionMethod::NonEqual, 2)).is_err());
    }

    #[test]
    fn method_names_parse() {
        for m in PartitionMethod::ALL {
            assert_eq!(m.to_string().parse::<PartitionMethod>().unwrap(), m);
        }
    }
}
