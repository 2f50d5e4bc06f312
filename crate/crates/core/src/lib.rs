//! Skew-aware stream partitioning.
//!
//! Routes a keyed stream from many sources to `n` workers. Heavy hitters are
//! detected online on each source and split over more workers than the rest
//! of the keys: `d` hash choices picked by [`solver::find_optimal_choices`]
//! (D-Choices) or every worker (W-Choices). Key grouping, shuffle grouping,
//! partial key grouping and round-robin head assignment are included as
//! baselines, together with a deterministic simulator that measures load
//! imbalance and per-key state replication.

pub mod cli;
pub mod error;
pub mod heavy_hitters;
pub mod model;
pub mod partition;
pub mod sim;
pub mod solver;
pub mod workload;

pub use error::{Error, Result};
pub use heavy_hitters::{default_theta, HeadSnapshot, SpaceSaving};
pub use model::{imbalance, merge_loads, ImbalanceReport, Key, LoadVector, Message, WorkerId};
pub use partition::{
    min_load_choice, HashFamily, Partitioner, PartitionerConfig, RoutingDecision, Scheme,
};
pub use sim::{emit_csv, memory_estimates, run, run_stream, sweep, RunResult, SimConfig, Workload};
pub use solver::{
    expected_workers, find_optimal_choices, prefix_constraint, HeadChoices, SolverInput,
    SolverOutput,
};
pub use workload::{generate, ingest, zipf_probability, StreamSource, ZipfConfig};
