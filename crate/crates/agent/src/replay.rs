use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::error::{AgentError, Result};

/// Loss-like quantity of the global model over the participants: mean loss
/// plus the max−min gap.
pub fn loss_objective(losses_before_next: &[f64]) -> f64 {
    let k = losses_before_next.len() as f64;
    let mean = losses_before_next.iter().sum::<f64>() / k;
    let max = losses_before_next.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = losses_before_next.iter().copied().fold(f64::INFINITY, f64::min);
    mean + (max - min)
}

/// `−(mean + max − min)` of the next round's `l_b`.
pub fn compute_reward(losses_before_next: &[f64]) -> f64 {
    -loss_objective(losses_before_next)
}

/// One transition with flat, already normalized state vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct Experience {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub priority: f64,
    /// Insertion order; eviction removes the smallest.
    pub seq: u64,
}

/// Bounded store of experiences, evicting the oldest when full.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Experience>,
    next_seq: u64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity: capacity.max(1),
            items: Vec::new(),
            next_seq: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[Experience] {
        &self.items
    }

    pub fn items_mut(&mut self) -> &mut [Experience] {
        &mut self.items
    }

    /// Stores `e` with a fresh sequence number.
    pub fn push(&mut self, mut e: Experience) {
        e.seq = self.next_seq;
        self.next_seq += 1;
        if self.items.len() == self.capacity {
            let oldest = self
                .items
                .iter()
                .enumerate()
                .min_by_key(|(_, x)| x.seq)
                .map(|(i, _)| i)
                .expect("full buffer is nonempty");
            self.items.remove(oldest);
        }
        self.items.push(e);
    }

    /// Descending priority; ties keep insertion order.
    pub fn sort_by_priority(&mut self) {
        self.items
            .sort_by(|a, b| b.priority.total_cmp(&a.priority).then(a.seq.cmp(&b.seq)));
    }

    /// `n` indices drawn with replacement, index `i` with probability
    /// proportional to `1 / (i + 1)`: after [`ReplayBuffer::sort_by_priority`]
    /// higher priority means more likely.
    pub fn sample_indices<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<usize>> {
        if self.items.is_empty() {
            return Err(AgentError::InsufficientBuffer { have: 0, need: n });
        }
        let dist = WeightedIndex::new((1..=self.items.len()).map(|r| 1.0 / r as f64))
            .map_err(|e| AgentError::Codec(e.to_string()))?;
        Ok((0..n).map(|_| dist.sample(rng)).collect())
    }

    /// Concatenates buffers, oldest first by per-buffer sequence (ties in
    /// buffer order), keeping the newest `capacity` experiences.
    pub fn merge(buffers: &[ReplayBuffer], capacity: usize) -> Self {
        let mut all: Vec<(u64, usize, Experience)> = buffers
            .iter()
            .enumerate()
            .flat_map(|(b, buf)| buf.items.iter().map(move |e| (e.seq, b, e.clone())))
            .collect();
        all.sort_by_key(|(seq, b, _)| (*seq, *b));
        let skip = all.len().saturating_sub(capacity);
        let mut out = Self::new(capacity);
        for (_, _, e) in all.into_iter().skip(skip) {
            out.push(e);
        }
        out
    }
}
