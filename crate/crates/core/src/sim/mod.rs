//! End-to-end simulation of one partitioned stream.
//!
//! The input is dealt round-robin to `s` sources. Each source routes with its
//! own [`Partitioner`] and only sees its local load; the harness keeps the
//! global ground truth, samples imbalance every `report_every` messages and
//! records which workers hold state for each key.

mod csv;
mod ledger;
mod sweep;

use std::collections::BTreeSet;
use std::path::PathBuf;

pub use self::csv::{emit_csv, format_number, write_csv, CSV_HEADER};
pub use self::ledger::{
    memory_estimates, KeyPlacementLedger, MemoryEstimates, Placement, WorkerSet,
};
pub use self::sweep::sweep;

use crate::error::{Error, Result};
use crate::heavy_hitters::default_theta;
use crate::model::{ImbalanceReport, Key, LoadVector, Message};
use crate::partition::{HashFamily, Partitioner, PartitionerConfig, Scheme};
use crate::solver::{HeadChoices, DEFAULT_EPSILON};
use crate::workload::{generate, ingest, StreamSource, ZipfConfig};

pub const DEFAULT_REPORT_EVERY: u64 = 10_000;
pub const DEFAULT_SOURCES: usize = 5;

#[derive(Clone, Debug, PartialEq)]
pub enum Workload {
    Zipf(ZipfConfig),
    File(PathBuf),
}

impl Workload {
    pub fn open(&self) -> Result<StreamSource> {
        match self {
            Workload::Zipf(cfg) => Ok(StreamSource::Zipf(generate(cfg)?)),
            Workload::File(path) => Ok(StreamSource::File(ingest(path)?)),
        }
    }

    pub fn zipf_exponent(&self) -> Option<f64> {
        match self {
            Workload::Zipf(cfg) => Some(cfg.z),
            Workload::File(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub scheme: Scheme,
    pub workers: usize,
    pub sources: usize,
    /// Head threshold; `None` means `1 / (5n)`.
    pub theta: Option<f64>,
    pub epsilon: f64,
    /// Seeds the hash family shared by all sources.
    pub seed: u64,
    pub report_every: u64,
    pub workload: Workload,
}

impl SimConfig {
    /// Defaults for everything but the scheme, worker count and workload.
    pub fn new(scheme: Scheme, workers: usize, workload: Workload) -> Self {
        SimConfig {
            scheme,
            workers,
            sources: DEFAULT_SOURCES,
            theta: None,
            epsilon: DEFAULT_EPSILON,
            seed: 0,
            report_every: DEFAULT_REPORT_EVERY,
            workload,
        }
    }

    pub fn theta(&self) -> Result<f64> {
        match self.theta {
            Some(t) => Ok(t),
            None => default_theta(self.workers),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::usage("need at least one worker"));
        }
        if self.sources == 0 {
            return Err(Error::usage("need at least one source"));
        }
        if self.report_every == 0 {
            return Err(Error::usage("report interval must be positive"));
        }
        let theta = self.theta()?;
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(Error::usage(format!(
                "theta must be in (0, 1], got {theta}"
            )));
        }
        if !self.epsilon.is_finite() || self.epsilon <= 0.0 {
            return Err(Error::usage(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if let Workload::Zipf(z) = &self.workload {
            z.validate()?;
        }
        Ok(())
    }

    fn partitioner_config(&self, source_index: usize) -> Result<PartitionerConfig> {
        Ok(PartitionerConfig {
            scheme: self.scheme,
            workers: self.workers,
            theta: self.theta()?,
            epsilon: self.epsilon,
            source_index,
            sources: self.sources,
        })
    }
}

/// One measurement point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub at_message: u64,
    pub imbalance: f64,
    /// Keys currently in the head of at least one source.
    pub head_size: usize,
    /// Width of head-key candidate sets (`n` for all workers).
    pub d: usize,
    pub memory: MemoryEstimates,
}

impl Sample {
    pub fn report(&self) -> ImbalanceReport {
        ImbalanceReport {
            at_message: self.at_message,
            imbalance: self.imbalance,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub config: SimConfig,
    pub messages: u64,
    pub samples: Vec<Sample>,
    pub final_imbalance: f64,
    /// Mean of the sampled imbalance series (0 for an empty stream).
    pub mean_imbalance: f64,
    pub memory: MemoryEstimates,
    /// Keys in the head of at least one source at the end of the run.
    pub head_size: usize,
    pub d_final: HeadChoices,
    /// Widest candidate set any source used for a head key.
    pub max_head_width: usize,
    pub global_load: LoadVector,
    pub local_loads: Vec<LoadVector>,
    pub ledger: KeyPlacementLedger,
}

impl RunResult {
    pub fn imbalance_series(&self) -> Vec<ImbalanceReport> {
        self.samples.iter().map(Sample::report).collect()
    }

    pub fn distinct_keys(&self) -> usize {
        self.ledger.distinct_keys()
    }

    /// Keys routed as head by any source at any time.
    pub fn keys_routed_as_head(&self) -> usize {
        self.ledger.iter().filter(|(_, p)| p.routed_as_head).count()
    }
}

/// Runs the configured workload.
pub fn run(config: &SimConfig) -> Result<RunResult> {
    config.validate()?;
    let source = config.workload.open()?;
    run_stream(config, source)
}

/// Runs `config` over an explicit message stream; `config.workload` is only
/// echoed.
pub fn run_stream<I>(config: &SimConfig, stream: I) -> Result<RunResult>
where
    I: IntoIterator<Item = Result<Message>>,
{
    config.validate()?;
    let n = config.workers;
    let family = HashFamily::for_workers(config.seed, n)?;
    let mut sources = (0..config.sources)
        .map(|i| Partitioner::new(config.partitioner_config(i)?, family))
        .collect::<Result<Vec<_>>>()?;
    let mut global = LoadVector::new(n)?;
    let mut ledger = KeyPlacementLedger::new(n);
    let mut samples = Vec::new();

    let mut routed = 0u64;
    for message in stream {
        let message = message?;
        let source = &mut sources[(routed % config.sources as u64) as usize];
        let decision = source.route(&message);
        global.record_send(decision.worker)?;
        ledger.record(message.key, decision.worker, decision.was_head);
        routed += 1;
        if routed % config.report_every == 0 {
            samples.push(sample(config, routed, &global, &sources, &ledger));
        }
    }
    if routed > 0 && samples.last().map(|s| s.at_message) != Some(routed) {
        samples.push(sample(config, routed, &global, &sources, &ledger));
    }

    let mean_imbalance = if samples.is_empty() {
        0.0
    } else {
        samples.iter().map(|s| s.imbalance).sum::<f64>() / samples.len() as f64
    };
    Ok(RunResult {
        config: config.clone(),
        messages: routed,
        final_imbalance: global.imbalance(),
        mean_imbalance,
        memory: memory_estimates(&ledger, n),
        head_size: head_union(&sources).len(),
        d_final: current_choices(config.scheme, &sources),
        max_head_width: sources
            .iter()
            .map(Partitioner::max_head_width)
            .max()
            .unwrap_or(0),
        samples,
        global_load: global,
        local_loads: sources.iter().map(|p| p.local_load().clone()).collect(),
        ledger,
    })
}

fn sample(
    config: &SimConfig,
    at: u64,
    global: &LoadVector,
    sources: &[Partitioner],
    ledger: &KeyPlacementLedger,
) -> Sample {
    Sample {
        at_message: at,
        imbalance: global.imbalance(),
        head_size: head_union(sources).len(),
        d: current_choices(config.scheme, sources).width(config.workers),
        memory: ledger.running_estimates(),
    }
}

fn head_union(sources: &[Partitioner]) -> BTreeSet<Key> {
    sources.iter().flat_map(|p| p.head_keys()).collect()
}

fn current_choices(scheme: Scheme, sources: &[Partitioner]) -> HeadChoices {
    match scheme {
        Scheme::Kg => HeadChoices::Choices(1),
        Scheme::Pkg => HeadChoices::Choices(2),
        Scheme::Sg => HeadChoices::AllWorkers,
        _ => sources
            .iter()
            .filter_map(Partitioner::head_choices)
            .max_by_key(|c| match c {
                HeadChoices::Choices(d) => *d,
                HeadChoices::AllWorkers => usize::MAX,
            })
            .unwrap_or(HeadChoices::Choices(2)),
    }
}
