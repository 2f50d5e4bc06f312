//! Stream and worker data model, plus the load and imbalance metrics.
//!
//! Loads are kept as raw message counts and only turned into fractions when
//! reported.

use std::fmt;

use crate::error::{Error, Result};

/// Opaque key identifier. Synthetic workloads use the key's rank; ingested
/// files intern each distinct line to a dense id.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Key(pub u64);

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// One element `<t, k, v>` of the input stream.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Message {
    pub timestamp: u64,
    pub key: Key,
    pub value: Vec<u8>,
}

impl Message {
    pub fn new(timestamp: u64, key: Key) -> Self {
        Message {
            timestamp,
            key,
            value: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WorkerId(pub usize);

impl WorkerId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for WorkerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Per-worker message counts. Used both for a source's local estimate and
/// for the global ground truth.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoadVector {
    counts: Vec<u64>,
    total: u64,
}

impl LoadVector {
    pub fn new(workers: usize) -> Result<Self> {
        if workers == 0 {
            return Err(Error::usage("load vector needs at least one worker"));
        }
        Ok(LoadVector {
            counts: vec![0; workers],
            total: 0,
        })
    }

    pub fn from_counts(counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::usage("load vector needs at least one worker"));
        }
        let total = counts.iter().sum();
        Ok(LoadVector { counts, total })
    }

    pub fn workers(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn get(&self, worker: WorkerId) -> u64 {
        self.counts[worker.0]
    }

    /// Records one message sent to `worker`.
    pub fn record_send(&mut self, worker: WorkerId) -> Result<()> {
        let n = self.counts.len();
        let slot = self
            .counts
            .get_mut(worker.0)
            .ok_or_else(|| Error::usage(format!("worker {worker} out of range for n={n}")))?;
        *slot += 1;
        self.total += 1;
        Ok(())
    }

    /// Maximum load minus average load, as a fraction of the messages counted
    /// so far. An empty vector has imbalance 0.
    pub fn imbalance(&self) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        let max = self.counts.iter().copied().max().unwrap_or(0) as f64;
        let total = self.total as f64;
        let avg = total / self.counts.len() as f64;
        ((max - avg) / total).max(0.0)
    }
}

/// Free-function form of [`LoadVector::imbalance`].
pub fn imbalance(load: &LoadVector) -> f64 {
    load.imbalance()
}

/// Element-wise sum of per-source load vectors.
pub fn merge_loads<'a, I>(locals: I) -> Result<LoadVector>
where
    I: IntoIterator<Item = &'a LoadVector>,
{
    let mut iter = locals.into_iter();
    let first = iter
        .next()
        .ok_or_else(|| Error::usage("merge_loads needs at least one vector"))?;
    let mut merged = first.clone();
    for local in iter {
        if local.workers() != merged.workers() {
            return Err(Error::usage(format!(
                "cannot merge load vectors of {} and {} workers",
                merged.workers(),
                local.workers()
            )));
        }
        for (acc, c) in merged.counts.iter_mut().zip(&local.counts) {
            *acc += c;
        }
        merged.total += local.total;
    }
    Ok(merged)
}

/// Imbalance measured after `at_message` messages.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImbalanceReport {
    pub at_message: u64,
    pub imbalance: f64,
}
