//! Online head tracking with the SpaceSaving counter sketch.
//!
//! Each source owns one [`SpaceSaving`] summary over its own sub-stream. The
//! head is the set of tracked keys whose estimated frequency reaches the
//! threshold `theta`.

use std::collections::{BTreeMap, HashMap};
use std::hash::Hash;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Counter {
    /// Estimated occurrences; never below the true count.
    pub count: u64,
    /// Upper bound on how much `count` overestimates the true count.
    pub overestimation: u64,
    // update sequence number of the last touch, used for LRU tie-breaking
    touched: u64,
}

/// SpaceSaving summary with at most `capacity` counters.
///
/// When full, an unseen key replaces the counter with the minimum count,
/// inheriting `c_min + 1` with overestimation `c_min`. Among several minimum
/// counters the least recently updated one is evicted.
#[derive(Clone, Debug)]
pub struct SpaceSaving<K> {
    capacity: usize,
    counters: HashMap<K, Counter>,
    // (count, touched) -> key; first entry is the eviction victim
    by_count: BTreeMap<(u64, u64), K>,
    observed: u64,
    clock: u64,
}

impl<K: Hash + Eq + Ord + Clone> SpaceSaving<K> {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::usage("SpaceSaving capacity must be positive"));
        }
        Ok(SpaceSaving {
            capacity,
            counters: HashMap::with_capacity(capacity),
            by_count: BTreeMap::new(),
            observed: 0,
            clock: 0,
        })
    }

    /// Summary sized for head threshold `theta`: `ceil(2 / theta)` counters.
    pub fn for_threshold(theta: f64) -> Result<Self> {
        Self::new(capacity_for_threshold(theta)?)
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn observed(&self) -> u64 {
        self.observed
    }

    pub fn len(&self) -> usize {
        self.counters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counters.is_empty()
    }

    pub fn get(&self, key: &K) -> Option<Counter> {
        self.counters.get(key).copied()
    }

    /// Estimated count. An untracked key may have been evicted, so once the
    /// table is full it is bounded by the smallest counter; before that it was
    /// never seen.
    pub fn estimate(&self, key: &K) -> u64 {
        match self.counters.get(key) {
            Some(c) => c.count,
            None if self.counters.len() >= self.capacity => {
                self.by_count.first_key_value().map_or(0, |((c, _), _)| *c)
            }
            None => 0,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, &Counter)> {
        self.counters.iter()
    }

    pub fn update(&mut self, key: K) {
        self.observed += 1;
        self.clock += 1;
        let now = self.clock;

        if let Some(counter) = self.counters.get_mut(&key) {
            self.by_count.remove(&(counter.count, counter.touched));
            counter.count += 1;
            counter.touched = now;
            self.by_count.insert((counter.count, now), key);
            return;
        }

        let (count, overestimation) = if self.counters.len() < self.capacity {
            (1, 0)
        } else {
            let ((c_min, _), victim) = self
                .by_count
                .pop_first()
                .expect("full summary has at least one counter");
            self.counters.remove(&victim);
            (c_min + 1, c_min)
        };
        self.counters.insert(
            key.clone(),
            Counter {
                count,
                overestimation,
                touched: now,
            },
        );
        self.by_count.insert((count, now), key);
    }

    /// Whether `key` is currently in the head for threshold `theta`.
    ///
    /// Agrees with membership in [`SpaceSaving::head`] for the same `theta`.
    pub fn is_head(&self, key: &K, theta: f64) -> bool {
        if self.observed == 0 {
            return false;
        }
        match self.counters.get(key) {
            Some(c) => c.count as f64 / self.observed as f64 >= theta,
            None => false,
        }
    }

    /// Snapshot of the tracked keys with estimated frequency `>= theta`.
    pub fn head(&self, theta: f64) -> HeadSnapshot<K> {
        if self.observed == 0 {
            return HeadSnapshot {
                entries: Vec::new(),
                tail_mass: 1.0,
                theta,
            };
        }
        let observed = self.observed as f64;
        let mut entries: Vec<(K, f64)> = self
            .counters
            .iter()
            .map(|(k, c)| (k, c.count as f64 / observed))
            .filter(|&(_, p)| p >= theta)
            .map(|(k, p)| (k.clone(), p))
            .collect();
        entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let head_mass: f64 = entries.iter().map(|(_, p)| p).sum();
        HeadSnapshot {
            entries,
            tail_mass: (1.0 - head_mass).clamp(0.0, 1.0),
            theta,
        }
    }
}

/// The current hot-key set, sorted by estimated probability (descending).
#[derive(Clone, Debug, PartialEq)]
pub struct HeadSnapshot<K> {
    pub entries: Vec<(K, f64)>,
    /// `1 - sum of head probabilities`, clamped to `[0, 1]`.
    pub tail_mass: f64,
    pub theta: f64,
}

impl<K> HeadSnapshot<K> {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn probabilities(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|(_, p)| *p)
    }

    pub fn keys(&self) -> impl Iterator<Item = &K> + '_ {
        self.entries.iter().map(|(k, _)| k)
    }
}

/// Default head threshold `1 / (5n)`.
pub fn default_theta(workers: usize) -> Result<f64> {
    if workers == 0 {
        return Err(Error::usage("default_theta needs at least one worker"));
    }
    Ok(1.0 / (5.0 * workers as f64))
}

/// Number of counters used per source for threshold `theta`.
pub fn capacity_for_threshold(theta: f64) -> Result<usize> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::usage(format!(
            "theta must be in (0, 1], got {theta}"
        )));
    }
    // absorb rounding in 2/theta so 1/(5n) gives exactly 10n counters
    Ok((2.0 / theta - 1e-9).ceil().max(1.0) as usize)
}
