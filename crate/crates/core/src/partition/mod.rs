//! Stream partitioning schemes.
//!
//! Every scheme except KG and SG is built on the Greedy-d process: hash the
//! key with `d` functions and send the message to the candidate with the
//! lowest *local* load. Tail keys always get two choices (as in PKG); head
//! keys, detected online with SpaceSaving, get
//!
//! * `DC`: `d` choices from the solver, or every worker when the solver gives up,
//! * `WC`: the least loaded of all workers,
//! * `RR`: a load-oblivious round-robin over all workers.
//!
//! One [`Partitioner`] lives on each source and never looks at another
//! source's state.

mod hash;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

pub use hash::HashFamily;

use crate::error::{Error, Result};
use crate::heavy_hitters::SpaceSaving;
use crate::model::{Key, LoadVector, Message, WorkerId};
use crate::solver::{find_optimal_choices, HeadChoices, SolverInput};

/// Head-key messages between forced solver refreshes in D-Choices.
pub const SOLVER_REFRESH_INTERVAL: u32 = 1_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Key grouping: `h_1(k)`.
    Kg,
    /// Shuffle grouping: round-robin, key ignored.
    Sg,
    /// Partial key grouping: Greedy-2 for every key.
    Pkg,
    /// Round-robin for head keys, Greedy-2 for the tail.
    Rr,
    /// D-Choices.
    Dc,
    /// W-Choices.
    Wc,
    /// Greedy-d with a fixed `d` for head keys and 2 for the tail. Used to
    /// find the empirically smallest `d` that D-Choices should pick.
    GreedyHead(usize),
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::Kg,
        Scheme::Sg,
        Scheme::Pkg,
        Scheme::Rr,
        Scheme::Dc,
        Scheme::Wc,
    ];

    pub fn name(&self) -> String {
        match self {
            Scheme::Kg => "kg".into(),
            Scheme::Sg => "sg".into(),
            Scheme::Pkg => "pkg".into(),
            Scheme::Rr => "rr".into(),
            Scheme::Dc => "dc".into(),
            Scheme::Wc => "wc".into(),
            Scheme::GreedyHead(d) => format!("greedy{d}"),
        }
    }

    /// Whether the scheme tracks heavy hitters.
    pub fn tracks_head(&self) -> bool {
        matches!(
            self,
            Scheme::Rr | Scheme::Dc | Scheme::Wc | Scheme::GreedyHead(_)
        )
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kg" => Ok(Scheme::Kg),
            "sg" => Ok(Scheme::Sg),
            "pkg" => Ok(Scheme::Pkg),
            "rr" => Ok(Scheme::Rr),
            "dc" => Ok(Scheme::Dc),
            "wc" => Ok(Scheme::Wc),
            other => Err(Error::usage(format!(
                "unknown scheme '{other}' (expected kg, sg, pkg, rr, dc or wc)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PartitionerConfig {
    pub scheme: Scheme,
    pub workers: usize,
    /// Head threshold on estimated key frequency.
    pub theta: f64,
    /// Imbalance tolerance for the D-Choices solver.
    pub epsilon: f64,
    /// Index of this source among `sources`; only shapes the SG cursor.
    pub source_index: usize,
    pub sources: usize,
}

impl PartitionerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::usage("need at least one worker"));
        }
        if self.sources == 0 || self.source_index >= self.sources {
            return Err(Error::usage(format!(
                "source index {} out of range for {} sources",
                self.source_index, self.sources
            )));
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::usage(format!(
                "theta must be in (0, 1], got {}",
                self.theta
            )));
        }
        if !self.epsilon.is_finite() || self.epsilon <= 0.0 {
            return Err(Error::usage(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if let Scheme::GreedyHead(d) = self.scheme {
            if d == 0 || d > self.workers.max(2) {
                return Err(Error::usage(format!(
                    "fixed head choices {d} out of range 1..={}",
                    self.workers.max(2)
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RoutingDecision {
    pub worker: WorkerId,
    /// Size of the candidate set considered (`n` when every worker was eligible).
    pub d_used: usize,
    pub was_head: bool,
}

/// Candidate with the lowest load; ties go to the lowest worker index.
pub fn min_load_choice(load: &LoadVector, candidates: &[WorkerId]) -> Result<WorkerId> {
    let n = load.workers();
    let mut best: Option<WorkerId> = None;
    for &w in candidates {
        if w.0 >= n {
            return Err(Error::usage(format!(
                "candidate {w} out of range for n={n}"
            )));
        }
        best = match best {
            Some(b) if (load.get(b), b) <= (load.get(w), w) => Some(b),
            _ => Some(w),
        };
    }
    best.ok_or_else(|| Error::usage("min_load_choice needs at least one candidate"))
}

#[derive(Clone, Debug, Default)]
struct ChoiceCache {
    choices: Option<HeadChoices>,
    head: HashSet<Key>,
    since_refresh: u32,
}

/// Per-source routing state.
#[derive(Clone, Debug)]
pub struct Partitioner {
    config: PartitionerConfig,
    family: HashFamily,
    local_load: LoadVector,
    summary: Option<SpaceSaving<Key>>,
    sg_cursor: usize,
    rr_cursor: usize,
    cache: ChoiceCache,
    max_head_width: usize,
    solver_calls: u64,
}

impl Partitioner {
    pub fn new(config: PartitionerConfig, family: HashFamily) -> Result<Self> {
        config.validate()?;
        if family.workers() != config.workers {
            return Err(Error::usage(format!(
                "hash family built for {} workers, partitioner has {}",
                family.workers(),
                config.workers
            )));
        }
        if let Scheme::GreedyHead(d) = config.scheme {
            if d > family.arity() {
                return Err(Error::usage(format!(
                    "fixed head choices {d} exceed hash family arity {}",
                    family.arity()
                )));
            }
        }
        let summary = if config.scheme.tracks_head() {
            Some(SpaceSaving::for_threshold(config.theta)?)
        } else {
            None
        };
        Ok(Partitioner {
            family,
            local_load: LoadVector::new(config.workers)?,
            summary,
            sg_cursor: config.source_index % config.workers,
            rr_cursor: 0,
            cache: ChoiceCache::default(),
            max_head_width: 0,
            solver_calls: 0,
            config,
        })
    }

    pub fn config(&self) -> &PartitionerConfig {
        &self.config
    }

    pub fn family(&self) -> &HashFamily {
        &self.family
    }

    pub fn local_load(&self) -> &LoadVector {
        &self.local_load
    }

    pub fn summary(&self) -> Option<&SpaceSaving<Key>> {
        self.summary.as_ref()
    }

    /// Keys currently in this source's head.
    pub fn head_keys(&self) -> Vec<Key> {
        match &self.summary {
            Some(s) => s.head(self.config.theta).keys().copied().collect(),
            None => Vec::new(),
        }
    }

    /// Choices currently given to head keys, if the scheme has a head.
    pub fn head_choices(&self) -> Option<HeadChoices> {
        match self.config.scheme {
            Scheme::Kg | Scheme::Sg | Scheme::Pkg => None,
            Scheme::Rr | Scheme::Wc => Some(HeadChoices::AllWorkers),
            Scheme::GreedyHead(d) => Some(HeadChoices::Choices(d)),
            Scheme::Dc => Some(self.cache.choices.unwrap_or(HeadChoices::Choices(2))),
        }
    }

    /// Largest candidate-set width any head key has been routed with.
    pub fn max_head_width(&self) -> usize {
        self.max_head_width
    }

    pub fn solver_calls(&self) -> u64 {
        self.solver_calls
    }

    pub fn route(&mut self, message: &Message) -> RoutingDecision {
        self.route_key(message.key)
    }

    pub fn route_key(&mut self, key: Key) -> RoutingDecision {
        let n = self.config.workers;
        let decision = match self.config.scheme {
            Scheme::Kg => RoutingDecision {
                worker: self.family.hash(0, key),
                d_used: 1,
                was_head: false,
            },
            Scheme::Sg => {
                let worker = WorkerId(self.sg_cursor);
                // global round-robin under round-robin dealing to sources
                self.sg_cursor = (self.sg_cursor + self.config.sources) % n;
                RoutingDecision {
                    worker,
                    d_used: n,
                    was_head: false,
                }
            }
            Scheme::Pkg => self.greedy(key, 2, false),
            Scheme::Rr | Scheme::Dc | Scheme::Wc | Scheme::GreedyHead(_) => {
                let theta = self.config.theta;
                let summary = self.summary.as_mut().expect("head schemes own a summary");
                summary.update(key);
                if summary.is_head(&key, theta) {
                    self.route_head(key)
                } else {
                    self.greedy(key, 2, false)
                }
            }
        };
        self.local_load
            .record_send(decision.worker)
            .expect("routing decisions stay within [0, n)");
        decision
    }

    fn route_head(&mut self, key: Key) -> RoutingDecision {
        let n = self.config.workers;
        let decision = match self.config.scheme {
            Scheme::Rr => {
                let worker = WorkerId(self.rr_cursor);
                self.rr_cursor = (self.rr_cursor + 1) % n;
                RoutingDecision {
                    worker,
                    d_used: n,
                    was_head: true,
                }
            }
            Scheme::Wc => self.least_loaded_of_all(),
            Scheme::GreedyHead(d) => self.greedy(key, d, true),
            Scheme::Dc => match self.dc_choices(key) {
                HeadChoices::Choices(d) => self.greedy(key, d, true),
                HeadChoices::AllWorkers => self.least_loaded_of_all(),
            },
            Scheme::Kg | Scheme::Sg | Scheme::Pkg => unreachable!("scheme has no head"),
        };
        self.max_head_width = self.max_head_width.max(decision.d_used);
        decision
    }

    fn dc_choices(&mut self, key: Key) -> HeadChoices {
        let stale = match self.cache.choices {
            None => true,
            Some(_) => {
                !self.cache.head.contains(&key)
                    || self.cache.since_refresh >= SOLVER_REFRESH_INTERVAL
            }
        };
        if stale {
            let summary = self.summary.as_ref().expect("head schemes own a summary");
            let snapshot = summary.head(self.config.theta);
            self.cache.head = snapshot.keys().copied().collect();
            let input = SolverInput::from_estimates(
                snapshot.probabilities().collect(),
                self.config.workers,
                self.config.epsilon,
            )
            .expect("workers and epsilon validated at construction");
            self.cache.choices = Some(find_optimal_choices(&input).decision);
            self.cache.since_refresh = 0;
            self.solver_calls += 1;
        }
        self.cache.since_refresh += 1;
        self.cache.choices.expect("refreshed above")
    }

    fn greedy(&self, key: Key, d: usize, was_head: bool) -> RoutingDecision {
        let load = &self.local_load;
        let mut best = self.family.hash(0, key);
        for i in 1..d {
            let w = self.family.hash(i, key);
            if (load.get(w), w) < (load.get(best), best) {
                best = w;
            }
        }
        RoutingDecision {
            worker: best,
            d_used: d,
            was_head,
        }
    }

    fn least_loaded_of_all(&self) -> RoutingDecision {
        let counts = self.local_load.counts();
        let mut best = 0;
        for (w, &c) in counts.iter().enumerate().skip(1) {
            if c < counts[best] {
                best = w;
            }
        }
        RoutingDecision {
            worker: WorkerId(best),
            d_used: counts.len(),
            was_head: true,
        }
    }
}
