//! Binary agent checkpoints and experience dumps.
//!
//! Agent checkpoint:
//! `FDRLAGT1 | u32 K | f64 max_loss | u8 normalize | u32 n | n bytes TOML config | 4 × (u64 n | n bytes network checkpoint)`,
//! networks in the order policy, value, target policy, target value.
//!
//! Experience dump:
//! `FDRLEXP1 | u32 K | u64 count | count × (3K + 2K + 1 + 3K + 1) f64`,
//! each record `s, a, r, s', priority`, oldest first. All integers and
//! floats are little-endian.

use std::path::Path;

use feddrl_nn::Network;

use crate::agent::DdpgAgent;
use crate::config::AgentConfig;
use crate::error::{AgentError, Result};
use crate::replay::Experience;
use crate::state::StateNormalizer;

pub const AGENT_MAGIC: &[u8; 8] = b"FDRLAGT1";
pub const EXPERIENCE_MAGIC: &[u8; 8] = b"FDRLEXP1";
/// Largest K accepted by the decoders.
pub const MAX_K: usize = 1 << 16;

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| AgentError::Codec(format!("truncated {what}")))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }
}

fn read_k(r: &mut Reader) -> Result<usize> {
    let k = r.u32("K")? as usize;
    if k == 0 || k > MAX_K {
        return Err(AgentError::Codec(format!("K = {k} out of range")));
    }
    Ok(k)
}

/// Agent networks, config and the normalizer's running max.
#[derive(Clone, Debug)]
pub struct AgentCheckpoint {
    pub agent: DdpgAgent,
    pub normalizer: StateNormalizer,
}

pub fn encode_agent(agent: &DdpgAgent, normalizer: &StateNormalizer) -> Result<Vec<u8>> {
    let cfg = toml::to_string(&agent.cfg).map_err(|e| AgentError::Codec(e.to_string()))?;
    let mut out = AGENT_MAGIC.to_vec();
    out.extend((agent.k() as u32).to_le_bytes());
    out.extend(normalizer.max_loss.to_le_bytes());
    out.push(u8::from(normalizer.enabled));
    out.extend((cfg.len() as u32).to_le_bytes());
    out.extend(cfg.as_bytes());
    for net in agent.networks() {
        let bytes = net.to_checkpoint_bytes();
        out.extend((bytes.len() as u64).to_le_bytes());
        out.extend(bytes);
    }
    Ok(out)
}

pub fn decode_agent(bytes: &[u8]) -> Result<AgentCheckpoint> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(8, "magic")? != AGENT_MAGIC {
        return Err(AgentError::Codec("not an agent checkpoint".into()));
    }
    let k = read_k(&mut r)?;
    let max_loss = r.f64("max_loss")?;
    if !(max_loss.is_finite() && max_loss >= 0.0) {
        return Err(AgentError::Codec(format!("max_loss {max_loss}")));
    }
    let enabled = match r.u8("normalize flag")? {
        0 => false,
        1 => true,
        b => return Err(AgentError::Codec(format!("normalize flag {b}"))),
    };
    let n = r.u32("config length")? as usize;
    let text = std::str::from_utf8(r.take(n, "config")?)
        .map_err(|_| AgentError::Codec("config is not UTF-8".into()))?;
    let cfg: AgentConfig = toml::from_str(text).map_err(|e| AgentError::Codec(e.to_string()))?;
    let mut nets = Vec::with_capacity(4);
    for what in ["policy", "value", "target policy", "target value"] {
        let n = r.u64(what)?;
        let n = usize::try_from(n).map_err(|_| AgentError::Codec(format!("{what} too large")))?;
        nets.push(Network::from_checkpoint_bytes(r.take(n, what)?)?);
    }
    if r.remaining() != 0 {
        return Err(AgentError::Codec(format!("{} trailing bytes", r.remaining())));
    }
    let nets: [Network; 4] = nets.try_into().expect("four networks");
    let agent = DdpgAgent::from_networks(cfg, k, nets, 0)?;
    Ok(AgentCheckpoint {
        agent,
        normalizer: StateNormalizer { enabled, max_loss },
    })
}

pub fn save_agent(path: impl AsRef<Path>, agent: &DdpgAgent, normalizer: &StateNormalizer) -> Result<()> {
    std::fs::write(path, encode_agent(agent, normalizer)?).map_err(|e| AgentError::Codec(e.to_string()))
}

pub fn load_agent(path: impl AsRef<Path>) -> Result<AgentCheckpoint> {
    decode_agent(&std::fs::read(path).map_err(|e| AgentError::Codec(e.to_string()))?)
}

fn record_len(k: usize) -> usize {
    3 * k + 2 * k + 1 + 3 * k + 1
}

/// Experiences oldest first.
pub fn encode_experiences(k: usize, items: &[Experience]) -> Result<Vec<u8>> {
    let mut sorted: Vec<&Experience> = items.iter().collect();
    sorted.sort_by_key(|e| e.seq);
    let mut out = EXPERIENCE_MAGIC.to_vec();
    out.extend((k as u32).to_le_bytes());
    out.extend((items.len() as u64).to_le_bytes());
    out.reserve(items.len() * record_len(k) * 8);
    for e in sorted {
        if e.state.len() != 3 * k || e.action.len() != 2 * k || e.next_state.len() != 3 * k {
            return Err(AgentError::State("experience does not match K".into()));
        }
        let fields = e
            .state
            .iter()
            .chain(&e.action)
            .chain(std::iter::once(&e.reward))
            .chain(&e.next_state)
            .chain(std::iter::once(&e.priority));
        for v in fields {
            out.extend(v.to_le_bytes());
        }
    }
    Ok(out)
}

/// Returns K and the experiences, with `seq` set to the record index.
pub fn decode_experiences(bytes: &[u8]) -> Result<(usize, Vec<Experience>)> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(8, "magic")? != EXPERIENCE_MAGIC {
        return Err(AgentError::Codec("not an experience dump".into()));
    }
    let k = read_k(&mut r)?;
    let count = r.u64("count")?;
    let per = record_len(k) * 8;
    let body = usize::try_from(count)
        .ok()
        .and_then(|c| c.checked_mul(per))
        .ok_or_else(|| AgentError::Codec("count overflows".into()))?;
    if body != r.remaining() {
        return Err(AgentError::Codec(format!(
            "{count} records need {body} bytes, found {}",
            r.remaining()
        )));
    }
    let mut items = Vec::with_capacity(count as usize);
    for seq in 0..count {
        let mut vals = |n: usize| -> Result<Vec<f64>> { (0..n).map(|_| r.f64("record")).collect() };
        let state = vals(3 * k)?;
        let action = vals(2 * k)?;
        let reward = vals(1)?[0];
        let next_state = vals(3 * k)?;
        let priority = vals(1)?[0];
        items.push(Experience {
            state,
            action,
            reward,
            next_state,
            priority,
            seq,
        });
    }
    Ok((k, items))
}
