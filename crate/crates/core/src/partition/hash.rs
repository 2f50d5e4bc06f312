use crate::error::{Error, Result};
use crate::model::{Key, WorkerId};

/// `arity` seeded hash functions `Key -> [0, n)`.
///
/// Function `i` is one keyed mixer seeded with `(base_seed, i)`, so every
/// source built with the same seed agrees on every key's candidates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HashFamily {
    base_seed: u64,
    workers: usize,
    arity: usize,
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

// splitmix64 finalizer
fn mix64(mut x: u64) -> u64 {
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

impl HashFamily {
    pub fn new(base_seed: u64, workers: usize, arity: usize) -> Result<Self> {
        if workers == 0 {
            return Err(Error::usage("hash family needs at least one worker"));
        }
        if arity < workers {
            return Err(Error::usage(format!(
                "hash family arity {arity} must be at least the worker count {workers}"
            )));
        }
        Ok(HashFamily {
            base_seed,
            workers,
            arity,
        })
    }

    /// Family with one function per worker (at least two).
    pub fn for_workers(base_seed: u64, workers: usize) -> Result<Self> {
        Self::new(base_seed, workers, workers.max(2))
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn base_seed(&self) -> u64 {
        self.base_seed
    }

    fn function_seed(&self, index: usize) -> u64 {
        mix64(self.base_seed ^ mix64((index as u64).wrapping_add(1).wrapping_mul(GOLDEN)))
    }

    /// `h_index(key)`, 0-based index. Caller guarantees `index < arity`.
    pub(crate) fn hash(&self, index: usize, key: Key) -> WorkerId {
        debug_assert!(index < self.arity);
        let seed = self.function_seed(index);
        let h = mix64(mix64(key.0 ^ seed).wrapping_add(seed));
        // multiply-shift range reduction
        WorkerId(((h as u128 * self.workers as u128) >> 64) as usize)
    }

    /// `[h_1(key), ..., h_d(key)]`; duplicates are kept.
    pub fn candidates(&self, key: Key, d: usize) -> Result<Vec<WorkerId>> {
        if d == 0 || d > self.arity {
            return Err(Error::usage(format!(
                "number of choices {d} out of range 1..={}",
                self.arity
            )));
        }
        Ok((0..d).map(|i| self.hash(i, key)).collect())
    }
}
