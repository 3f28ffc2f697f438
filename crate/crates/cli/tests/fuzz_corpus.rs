//! Replays the fuzz corpus seeds on stable: every seed must decode, and
//! truncations and single-byte corruptions of it must fail cleanly.

use std::path::PathBuf;

use feddrl_cli::ExperimentConfig;
use feddrl_data::{parse_idx, PartitionManifest};
use feddrl_metrics::RunLog;
use feddrl_nn::{LayerSpec, Network};

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

/// Truncations at a spread of lengths plus a few byte flips.
fn variants(bytes: &[u8]) -> Vec<Vec<u8>> {
    let mut v = Vec::new();
    let step = (bytes.len() / 40).max(1);
    for cut in (0..bytes.len()).step_by(step) {
        v.push(bytes[..cut].to_vec());
    }
    for pos in (0..bytes.len()).step_by(step.max(3)) {
        let mut b = bytes.to_vec();
        b[pos] ^= 0xA5;
        v.push(b);
    }
    v
}

fn text(b: &[u8]) -> Option<&str> {
    std::str::from_utf8(b).ok()
}

#[test]
fn idx_seeds() {
    for (name, b) in seeds("idx_parse") {
        let a = parse_idx(&b).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(a.dims[0], 3, "{name}");
        for v in variants(&b) {
            if let Ok(a) = parse_idx(&v) {
                assert_eq!(a.dims.iter().product::<usize>(), a.data.len());
            }
        }
    }
}

#[test]
fn manifest_seeds() {
    for (name, b) in seeds("manifest_parse") {
        let m = PartitionManifest::from_text(text(&b).unwrap()).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(m.to_text().as_bytes(), &b[..]);
        for v in variants(&b) {
            if let Some(t) = text(&v) {
                let _ = PartitionManifest::from_text(t);
            }
        }
    }
}

#[test]
fn checkpoint_seeds() {
    for (name, b) in seeds("checkpoint_decode") {
        let net = Network::from_checkpoint_bytes(&b).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(net.to_checkpoint_bytes(), b);
        for v in variants(&b) {
            let _ = Network::from_checkpoint_bytes(&v);
        }
    }
}

#[test]
fn agent_checkpoint_seeds() {
    for (name, b) in seeds("agent_checkpoint_decode") {
        let c = feddrl_agent::decode_agent(&b).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(feddrl_agent::encode_agent(&c.agent, &c.normalizer).unwrap(), b);
        for v in variants(&b) {
            let _ = feddrl_agent::decode_agent(&v);
        }
    }
}

#[test]
fn experience_seeds() {
    for (name, b) in seeds("experience_decode") {
        let (k, exps) = feddrl_agent::decode_experiences(&b).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(!exps.is_empty());
        assert!(exps.iter().all(|e| e.state.len() == 3 * k));
        for v in variants(&b) {
            let _ = feddrl_agent::decode_experiences(&v);
        }
    }
}

#[test]
fn run_csv_seeds() {
    for (name, b) in seeds("run_csv_parse") {
        let t = text(&b).unwrap();
        let (rounds, timing) = match t.split_once('\0') {
            Some((r, t)) => (r, Some(t)),
            None => (t, None),
        };
        let log = RunLog::from_csv(rounds, timing).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(!log.is_empty());
        for v in variants(&b) {
            if let Some(t) = text(&v) {
                let _ = RunLog::from_csv(t, None);
            }
        }
    }
}

#[test]
fn config_seeds() {
    for (name, b) in seeds("config_parse") {
        let cfg = ExperimentConfig::from_toml(text(&b).unwrap(), &[]).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml(), &[]).unwrap(), cfg);
        for v in variants(&b) {
            if let Some(t) = text(&v) {
                let _ = ExperimentConfig::from_toml(t, &[]);
            }
        }
    }
}

#[test]
fn layer_spec_seeds() {
    for (name, b) in seeds("layer_spec_parse") {
        let spec: LayerSpec = text(&b).unwrap().parse().unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(spec.to_string(), text(&b).unwrap());
        for v in variants(&b) {
            if let Some(t) = text(&v) {
                let _ = t.parse::<LayerSpec>();
            }
        }
    }
}
