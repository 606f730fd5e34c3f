//! Prioritized replay with priorities mixed from reward and cost TD errors.
//!
//! Snapshot layout (all integers and floats little-endian):
//!
//! ```text
//! magic        4 bytes   b"ERPB"
//! version      u32       1
//! capacity     u64
//! alpha        f64
//! max_priority f64
//! cursor       u64       next write slot
//! len          u64       stored transitions
//! records      len x { byte_len u32, payload }
//!   payload:   obs_len u32, obs obs_len x f64,
//!              action 3 x f64, reward f64, cost f64,
//!              next_len u32, next_obs next_len x f64,
//!              done u8
//! priorities   len x f64 raw priorities p_i (before the alpha exponent)
//! ```

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::sum_tree::SumTree;
use crate::error::{Error, Result};

pub const SNAPSHOT_MAGIC: [u8; 4] = *b"ERPB";
pub const SNAPSHOT_VERSION: u32 = 1;

/// Guard in the reward/cost error ratio.
pub const RATIO_EPS: f64 = 1e-8;
/// Added to every stored priority so no transition becomes unsampleable.
pub const PRIORITY_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub observation: Vec<f64>,
    /// Normalized plan action.
    pub action: [f64; 3],
    pub reward: f64,
    pub cost: f64,
    pub next_observation: Vec<f64>,
    pub done: bool,
}

/// Priority and mixing weights from the two TD-error magnitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicPriority {
    pub priority: f64,
    pub w_reward: f64,
    pub w_cost: f64,
    pub ratio: f64,
}

pub fn dynamic_priority(delta_reward: f64, delta_cost: f64) -> DynamicPriority {
    let (dr, dc) = (delta_reward.abs(), delta_cost.abs());
    let ratio = (dr / (dc + RATIO_EPS)).clamp(0.2, 5.0);
    let w_cost = 1.0 / (1.0 + ratio);
    // complement keeps w_reward + w_cost == 1 exactly
    let w_reward = 1.0 - w_cost;
    DynamicPriority {
        priority: w_reward * dr + w_cost * dc,
        w_reward,
        w_cost,
        ratio,
    }
}

/// Linear importance-exponent schedule from `start` to 1 over `steps` samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaSchedule {
    pub start: f64,
    pub steps: u64,
}

impl Default for BetaSchedule {
    fn default() -> Self {
        Self {
            start: 0.4,
            steps: 100_000,
        }
    }
}

impl BetaSchedule {
    pub fn constant(beta: f64) -> Self {
        Self {
            start: beta,
            steps: 0,
        }
    }

    pub fn at(&self, step: u64) -> f64 {
        if self.steps == 0 {
            return self.start;
        }
        let frac = (step as f64 / self.steps as f64).min(1.0);
        self.start + frac * (1.0 - self.start)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledBatch {
    pub indices: Vec<usize>,
    pub transitions: Vec<Transition>,
    /// Importance weights normalized by the batch maximum.
    pub weights: Vec<f64>,
    pub beta: f64,
}

#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    alpha: f64,
    beta: BetaSchedule,
    samples_drawn: u64,
    storage: Vec<Transition>,
    priorities: Vec<f64>,
    tree: SumTree,
    cursor: usize,
    max_priority: f64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, alpha: f64, beta: BetaSchedule) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::validation("capacity", "must be > 0"));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::validation("alpha", format!("{alpha} outside [0, 1]")));
        }
        if !(0.0..=1.0).contains(&beta.start) {
            return Err(Error::validation("beta", format!("{} outside [0, 1]", beta.start)));
        }
        Ok(Self {
            capacity,
            alpha,
            beta,
            samples_drawn: 0,
            storage: Vec::with_capacity(capacity),
            priorities: Vec::with_capacity(capacity),
            tree: SumTree::new(capacity),
            cursor: 0,
            max_priority: 1.0,
        })
    }

    pub fn len(&self) -> usize {
        self.storage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.storage.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn priorities(&self) -> &[f64] {
        &self.priorities
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.storage
    }

    pub fn max_priority(&self) -> f64 {
        self.max_priority
    }

    /// Sum of `p_i^alpha` held at the tree root.
    pub fn total_mass(&self) -> f64 {
        self.tree.total()
    }

    pub fn tree_leaf(&self, index: usize) -> f64 {
        self.tree.get(index)
    }

    /// Sampling probability of slot `index`.
    pub fn probability(&self, index: usize) -> f64 {
        self.tree.get(index) / self.tree.total()
    }

    fn store_priority(&mut self, index: usize, priority: f64) {
        if index == self.priorities.len() {
            self.priorities.push(priority);
        } else {
            self.priorities[index] = priority;
        }
        self.tree.set(index, priority.powf(self.alpha));
    }

    /// Inserts at the current maximum priority, overwriting the oldest entry
    /// once full. Returns the slot written.
    pub fn push(&mut self, transition: Transition) -> usize {
        let slot = self.cursor;
        if slot == self.storage.len() {
            self.storage.push(transition);
        } else {
            self.storage[slot] = transition;
        }
        self.store_priority(slot, self.max_priority);
        self.cursor = (self.cursor + 1) % self.capacity;
        slot
    }

    /// Sets a raw priority directly.
    pub fn set_priority(&mut self, index: usize, priority: f64) -> Result<()> {
        if index >= self.len() {
            return Err(Error::validation("index", format!("{index} not stored")));
        }
        if !(priority > 0.0 && priority.is_finite()) {
            return Err(Error::validation("priority", format!("{priority} must be > 0")));
        }
        self.store_priority(index, priority);
        self.max_priority = self.max_priority.max(priority);
        Ok(())
    }

    /// Re-prioritizes a slot from its reward and cost TD errors.
    pub fn update_td(&mut self, index: usize, delta_reward: f64, delta_cost: f64) -> Result<DynamicPriority> {
        let dp = dynamic_priority(delta_reward, delta_cost);
        self.set_priority(index, dp.priority + PRIORITY_EPS)?;
        Ok(dp)
    }

    /// Stratified proportional sampling: `[0, total)` is split into `k` equal
    /// strata with one uniform draw in each.
    pub fn sample_batch<R: Rng + ?Sized>(&mut self, k: usize, rng: &mut R) -> Result<SampledBatch> {
        if k == 0 || self.len() < k {
            return Err(Error::BufferUnderfilled {
                available: self.len(),
                requested: k,
            });
        }
        let beta = self.beta.at(self.samples_drawn);
        self.samples_drawn += 1;
        let total = self.tree.total();
        let n = self.len() as f64;
        let stratum = total / k as f64;

        let mut indices = Vec::with_capacity(k);
        let mut weights = Vec::with_capacity(k);
        for i in 0..k {
            let u: f64 = rng.gen();
            let idx = self.tree.find((i as f64 + u) * stratum).min(self.len() - 1);
            let p = self.tree.get(idx) / total;
            indices.push(idx);
            weights.push((n * p).powf(-beta));
        }
        let max_w = weights.iter().copied().fold(0.0, f64::max);
        for w in &mut weights {
            *w /= max_w;
        }
        Ok(SampledBatch {
            transitions: indices.iter().map(|&i| self.storage[i].clone()).collect(),
            indices,
            weights,
            beta,
        })
    }

    pub fn to_snapshot(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&SNAPSHOT_MAGIC);
        out.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.capacity as u64).to_le_bytes());
        out.extend_from_slice(&self.alpha.to_le_bytes());
        out.extend_from_slice(&self.max_priority.to_le_bytes());
        out.extend_from_slice(&(self.cursor as u64).to_le_bytes());
        out.extend_from_slice(&(self.storage.len() as u64).to_le_bytes());
        for t in &self.storage {
            let payload = encode_transition(t);
            out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
            out.extend_from_slice(&payload);
        }
        for p in &self.priorities {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    /// Restores a buffer; the beta schedule is not part of the snapshot.
    pub fn from_snapshot(bytes: &[u8], beta: BetaSchedule) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != SNAPSHOT_MAGIC {
            return Err(Error::Snapshot("bad magic".into()));
        }
        let version = r.u32()?;
        if version != SNAPSHOT_VERSION {
            return Err(Error::Snapshot(format!("unsupported version {version}")));
        }
        let capacity = r.u64()? as usize;
        let alpha = r.f64()?;
        let max_priority = r.f64()?;
        let cursor = r.u64()? as usize;
        let len = r.u64()? as usize;
        if len > capacity || cursor >= capacity.max(1) {
            return Err(Error::Snapshot("inconsistent header".into()));
        }
        let mut buf = Self::new(capacity, alpha, beta)?;
        for _ in 0..len {
            let n = r.u32()? as usize;
            let mut rec = Reader {
                bytes: r.take(n)?,
                pos: 0,
            };
            buf.storage.push(decode_transition(&mut rec)?);
            if rec.pos != n {
                return Err(Error::Snapshot("record length mismatch".into()));
            }
        }
        for i in 0..len {
            let p = r.f64()?;
            if !(p > 0.0 && p.is_finite()) {
                return Err(Error::Snapshot(format!("priority {p} at {i}")));
            }
            buf.store_priority(i, p);
        }
        if r.pos != bytes.len() {
            return Err(Error::Snapshot("trailing bytes".into()));
        }
        buf.cursor = cursor;
        buf.max_priority = max_priority;
        Ok(buf)
    }
}

fn encode_transition(t: &Transition) -> Vec<u8> {
    let mut out = Vec::new();
    let floats = |out: &mut Vec<u8>, v: &[f64]| {
        for x in v {
            out.extend_from_slice(&x.to_le_bytes());
        }
    };
    out.extend_from_slice(&(t.observation.len() as u32).to_le_bytes());
    floats(&mut out, &t.observation);
    floats(&mut out, &t.action);
    floats(&mut out, &[t.reward, t.cost]);
    out.extend_from_slice(&(t.next_observation.len() as u32).to_le_bytes());
    floats(&mut out, &t.next_observation);
    out.push(t.done as u8);
    out
}

fn decode_transition(r: &mut Reader) -> Result<Transition> {
    let n = r.u32()? as usize;
    let observation = r.f64s(n)?;
    let action = [r.f64()?, r.f64()?, r.f64()?];
    let reward = r.f64()?;
    let cost = r.f64()?;
    let n = r.u32()? as usize;
    let next_observation = r.f64s(n)?;
    let done = match r.take(1)?[0] {
        0 => false,
        1 => true,
        b => return Err(Error::Snapshot(format!("done flag {b}"))),
    };
    Ok(Transition {
        observation,
        action,
        reward,
        cost,
        next_observation,
        done,
    })
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Snapshot("truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }
}
