//! Model checkpoint codec.
//!
//! Layout: a UTF-8 header
//!
//! ```text
//! feddrl-nn v1
//! layers <n>
//! <one layer line per layer, e.g. "dense 784 64" or "leaky_relu">
//! params <count>
//! ```
//!
//! followed by exactly `count` little-endian `f64` values.

use std::fs;
use std::path::Path;

use crate::error::{NnError, Result};
use crate::layer::LayerSpec;
use crate::network::Network;

const MAGIC: &str = "feddrl-nn v1";

fn bad(msg: impl Into<String>) -> NnError {
    NnError::Checkpoint(msg.into())
}

impl Network {
    pub fn to_checkpoint_bytes(&self) -> Vec<u8> {
        let mut header = format!("{MAGIC}\nlayers {}\n", self.specs().len());
        for spec in self.specs() {
            header.push_str(&spec.to_string());
            header.push('\n');
        }
        header.push_str(&format!("params {}\n", self.param_count()));
        let mut out = header.into_bytes();
        out.reserve(self.param_count() * 8);
        for v in self.params() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_checkpoint_bytes(bytes: &[u8]) -> Result<Network> {
        let mut pos = 0usize;
        let mut next_line = || -> Result<&str> {
            let rest = &bytes[pos..];
            let end = rest
                .iter()
                .position(|&b| b == b'\n')
                .ok_or_else(|| bad("truncated header"))?;
            pos += end + 1;
            std::str::from_utf8(&rest[..end]).map_err(|_| bad("header is not UTF-8"))
        };
        if next_line()? != MAGIC {
            return Err(bad("missing magic line"));
        }
        let count_field = |line: &str, key: &str| -> Result<usize> {
            line.strip_prefix(key)
                .and_then(|r| r.strip_prefix(' '))
                .and_then(|r| r.parse::<usize>().ok())
                .ok_or_else(|| bad(format!("expected `{key} <n>`, got {line:?}")))
        };
        let n_layers = count_field(next_line()?, "layers")?;
        // every layer needs at least one header byte, so this bounds the allocation
        if n_layers > bytes.len() {
            return Err(bad("layer count exceeds file size"));
        }
        let mut specs = Vec::with_capacity(n_layers);
        for _ in 0..n_layers {
            specs.push(next_line()?.parse::<LayerSpec>()?);
        }
        let n_params = count_field(next_line()?, "params")?;
        let body = &bytes[pos..];
        if n_params.checked_mul(8) != Some(body.len()) {
            return Err(bad(format!(
                "expected {n_params} parameters, found {} bytes",
                body.len()
            )));
        }
        let expected = Network::count_params(&specs)?;
        if expected != n_params {
            return Err(bad(format!(
                "layers need {expected} parameters, header says {n_params}"
            )));
        }
        let params = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        Network::with_params(specs, params)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        fs::write(path, self.to_checkpoint_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Network> {
        let bytes = fs::read(path.as_ref())
            .map_err(|e| bad(format!("{}: {e}", path.as_ref().display())))?;
        Network::from_checkpoint_bytes(&bytes)
    }
}
