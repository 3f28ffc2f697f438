//! Line-oriented manifest format.
//!
//! ```text
//! feddrl-manifest v1
//! method = CE
//! clients = 10
//! ...
//! histogram 0 = 0 250 250 0 ...
//! client_id	sample_index
//! 0	17
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{DataError, Result};
use crate::partition::{PartitionManifest, PartitionSpec};

const MAGIC: &str = "feddrl-manifest v1";
const ROWS_HEADER: &str = "client_id\tsample_index";

// Upper bounds applied before allocating from untrusted input.
const MAX_CLIENTS: usize = 1 << 20;
const MAX_CLASSES: usize = 1 << 16;

impl PartitionManifest {
    pub fn to_text(&self) -> String {
        let s = &self.spec;
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC}");
        let _ = writeln!(out, "method = {}", s.method);
        let _ = writeln!(out, "clients = {}", s.clients);
        let _ = writeln!(out, "delta = {}", s.delta);
        let _ = writeln!(out, "seed = {}", s.seed);
        let _ = writeln!(out, "labels_per_client = {}", s.labels_per_client);
        let _ = writeln!(out, "groups = {}", s.groups);
        let _ = writeln!(out, "pareto_shape = {}", s.pareto_shape);
        let _ = writeln!(out, "min_samples = {}", s.min_samples);
        let _ = writeln!(out, "cn_min_factor = {}", s.cn_min_factor);
        let _ = writeln!(out, "cn_max_factor = {}", s.cn_max_factor);
        let _ = writeln!(out, "class_count = {}", self.class_count);
        let _ = writeln!(out, "dataset_len = {}", self.dataset_len);
        if let Some(g) = &self.groups {
            let _ = writeln!(out, "group_of = {}", join(g));
        }
        for (k, h) in self.histograms.iter().enumerate() {
            let _ = writeln!(out, "histogram {k} = {}", join(h));
        }
        let _ = writeln!(out, "{ROWS_HEADER}");
        for (k, idx) in self.assignments.iter().enumerate() {
            for i in idx {
                let _ = writeln!(out, "{k}\t{i}");
            }
        }
        out
    }

    /// Parses and validates a manifest. Client rows may interleave; each
    /// client's samples keep their file order.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next() != Some(MAGIC) {
            return Err(bad("missing magic line"));
        }
        let mut fields: HashMap<String, String> = HashMap::new();
        let mut hist_lines: Vec<(usize, String)> = Vec::new();
        loop {
            let line = lines.next().ok_or_else(|| bad("missing row header"))?;
            if line == ROWS_HEADER {
                break;
            }
            let (key, value) = line
                .split_once(" = ")
                .ok_or_else(|| bad(&format!("malformed header line {line:?}")))?;
            if let Some(k) = key.strip_prefix("histogram ") {
                hist_lines.push((num(k, "histogram client")?, value.to_string()));
            } else if fields.insert(key.to_string(), value.to_string()).is_some() {
                return Err(bad(&format!("duplicate key {key}")));
            }
        }
        let mut take = |k: &str| fields.remove(k).ok_or_else(|| bad(&format!("missing key {k}")));
        let spec = PartitionSpec {
            method: take("method")?.parse()?,
            clients: num(&take("clients")?, "clients")?,
            delta: real(&take("delta")?, "delta")?,
            seed: num(&take("seed")?, "seed")?,
            labels_per_client: num(&take("labels_per_client")?, "labels_per_client")?,
            groups: num(&take("groups")?, "groups")?,
            pareto_shape: real(&take("pareto_shape")?, "pareto_shape")?,
            min_samples: num(&take("min_samples")?, "min_samples")?,
            cn_min_factor: real(&take("cn_min_factor")?, "cn_min_factor")?,
            cn_max_factor: real(&take("cn_max_factor")?, "cn_max_factor")?,
        };
        let class_count: usize = num(&take("class_count")?, "class_count")?;
        let dataset_len: usize = num(&take("dataset_len")?, "dataset_len")?;
        let groups = fields
            .remove("group_of")
            .map(|g| list(&g, "group_of"))
            .transpose()?;
        if let Some(k) = fields.keys().next() {
            return Err(bad(&format!("unknown key {k}")));
        }
        if spec.clients > MAX_CLIENTS || class_count > MAX_CLASSES {
            return Err(bad("client or class count too large"));
        }

        let mut histograms = vec![None; spec.clients];
        for (k, v) in hist_lines {
            let slot = histograms
                .get_mut(k)
                .ok_or_else(|| bad(&format!("histogram for unknown client {k}")))?;
            if slot.replace(list(&v, "histogram")?).is_some() {
                return Err(bad(&format!("duplicate histogram for client {k}")));
            }
        }
        let histograms = histograms
            .into_iter()
            .enumerate()
            .map(|(k, h)| h.ok_or_else(|| bad(&format!("missing histogram for client {k}"))))
            .collect::<Result<Vec<_>>>()?;

        let mut assignments = vec![Vec::new(); spec.clients];
        for line in lines {
            let (k, i) = line
                .split_once('\t')
                .ok_or_else(|| bad(&format!("malformed row {line:?}")))?;
            let k: usize = num(k, "client_id")?;
            let i: usize = num(i, "sample_index")?;
            assignments
                .get_mut(k)
                .ok_or_else(|| bad(&format!("row for unknown client {k}")))?
                .push(i);
        }
        let m = PartitionManifest {
            spec,
            class_count,
            dataset_len,
            assignments,
            histograms,
            groups,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| DataError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
        Self::from_text(&text)
    }
}

fn bad(msg: &str) -> DataError {
    DataError::Manifest(msg.to_string())
}

fn join(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}

fn num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| bad(&format!("bad {what}: {s:?}")))
}

fn real(s: &str, what: &str) -> Result<f64> {
    let v: f64 = num(s, what)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad(&format!("non-finite {what}")))
    }
}

fn list(s: &str, what: &str) -> Result<Vec<usize>> {
    s.split_whitespace().map(|x| num(x, what)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Dataset;
    use crate::partition::{partition, PartitionMethod};

    fn manifest(method: PartitionMethod) -> PartitionManifest {
        let labels: Vec<usize> = (0..400).map(|i| i % 10).collect();
        let ds = Dataset::new("t", 10, 1, vec![0.0; 400], labels).unwrap();
        let spec = PartitionSpec {
            method,
            clients: 5,
            seed: 3,
            ..Default::default()
        };
        partition(&ds, &spec).unwrap()
    }

    #[test]
    fn round_trips_every_method() {
        for m in PartitionMethod::ALL {
            let man = manifest(m);
            let text = man.to_text();
            assert_eq!(PartitionManifest::from_text(&text).unwrap(), man, "{m}");
        }
    }

    #[test]
    fn header_lists_method_clients_delta_seed() {
        let text = manifest(PartitionMethod::ClusteredEqual).to_text();
        assert!(text.starts_with("feddrl-manifest v1\nmethod = CE\nclients = 5\ndelta = 0.6\nseed = 3\n"));
        assert!(text.contains("\nclient_id\tsample_index\n0\t"));
    }

    #[test]
    fn rejects_duplicate_sample() {
        let man = manifest(PartitionMethod::Equal);
        let first = man.assignments[0][0];
        let text = man.to_text() + &format!("1\t{first}\n");
        assert!(PartitionManifest::from_text(&text).is_err());
    }

    #[test]
    fn rejects_garbage() {
        for t in ["", "feddrl-manifest v1\n", "nope\nclient_id\tsample_index\n"] {
            assert!(PartitionManifest::from_text(t).is_err());
        }
        let text = manifest(PartitionMethod::Pareto).to_text();
        assert!(PartitionManifest::from_text(&text.replace("clients = 5", "clients = x")).is_err());
        assert!(PartitionManifest::from_text(&text.replace("seed = 3\n", "")).is_err());
    }
}
