use std::collections::HashMap;

use crate::model::{Key, WorkerId};

/// Small fixed-width bitset over worker indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WorkerSet {
    words: Box<[u64]>,
    len: usize,
}

impl WorkerSet {
    pub fn new(workers: usize) -> Self {
        WorkerSet {
            words: vec![0; workers.div_ceil(64)].into_boxed_slice(),
            len: 0,
        }
    }

    /// Returns true if `worker` was not already present.
    pub fn insert(&mut self, worker: WorkerId) -> bool {
        let (word, bit) = (worker.0 / 64, worker.0 % 64);
        let mask = 1u64 << bit;
        if self.words[word] & mask != 0 {
            return false;
        }
        self.words[word] |= mask;
        self.len += 1;
        true
    }

    pub fn contains(&self, worker: WorkerId) -> bool {
        self.words
            .get(worker.0 / 64)
            .is_some_and(|w| w & (1 << (worker.0 % 64)) != 0)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = WorkerId> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            (0..64)
                .filter(move |b| w & (1 << b) != 0)
                .map(move |b| WorkerId(i * 64 + b))
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Placement {
    /// Messages seen with this key (`f_k`).
    pub messages: u64,
    /// Distinct workers that received the key.
    pub workers: WorkerSet,
    /// Whether any source ever routed this key as a head key.
    pub routed_as_head: bool,
}

/// Which workers hold state for which key. One unit of memory per
/// (key, worker) pair.
#[derive(Clone, Debug)]
pub struct KeyPlacementLedger {
    workers: usize,
    entries: HashMap<Key, Placement>,
    // running totals, kept equal to memory_estimates(self)
    units: u64,
    mem_pkg: u64,
    mem_sg: u64,
}

impl KeyPlacementLedger {
    pub fn new(workers: usize) -> Self {
        KeyPlacementLedger {
            workers,
            entries: HashMap::new(),
            units: 0,
            mem_pkg: 0,
            mem_sg: 0,
        }
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn record(&mut self, key: Key, worker: WorkerId, was_head: bool) {
        let n = self.workers;
        let entry = self.entries.entry(key).or_insert_with(|| Placement {
            messages: 0,
            workers: WorkerSet::new(n),
            routed_as_head: false,
        });
        entry.messages += 1;
        entry.routed_as_head |= was_head;
        if entry.messages <= 2 {
            self.mem_pkg += 1;
        }
        if entry.messages <= n as u64 {
            self.mem_sg += 1;
        }
        if entry.workers.insert(worker) {
            self.units += 1;
        }
    }

    pub fn get(&self, key: &Key) -> Option<&Placement> {
        self.entries.get(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Key, &Placement)> {
        self.entries.iter()
    }

    pub fn distinct_keys(&self) -> usize {
        self.entries.len()
    }

    pub(crate) fn running_estimates(&self) -> MemoryEstimates {
        MemoryEstimates {
            actual: self.units,
            mem_pkg: self.mem_pkg,
            mem_sg: self.mem_sg,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct MemoryEstimates {
    /// `sum_k |workers(k)|`.
    pub actual: u64,
    /// `sum_k min(f_k, 2)`.
    pub mem_pkg: u64,
    /// `sum_k min(f_k, n)`.
    pub mem_sg: u64,
}

/// Actual memory of a run next to the PKG and SG estimators.
pub fn memory_estimates(ledger: &KeyPlacementLedger, workers: usize) -> MemoryEstimates {
    let mut est = MemoryEstimates::default();
    for placement in ledger.entries.values() {
        est.actual += placement.workers.len() as u64;
        est.mem_pkg += placement.messages.min(2);
        est.mem_sg += placement.messages.min(workers as u64);
    }
    est
}
