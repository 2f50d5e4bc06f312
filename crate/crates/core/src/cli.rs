//! Command-line interface of the `slb` binary.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::Parser;

use crate::error::{Error, Result};
use crate::partition::Scheme;
use crate::sim::{self, RunResult, SimConfig, Workload};
use crate::workload::ZipfConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;

/// Simulate skew-aware stream partitioning and report load imbalance.
#[derive(Debug, Clone, Parser)]
#[command(name = "slb", version)]
pub struct Args {
    /// Partitioning scheme: kg, sg, pkg, rr, dc or wc.
    #[arg(long, value_parser = parse_scheme, required_unless_present = "sweep")]
    pub scheme: Option<Scheme>,

    /// Number of downstream workers.
    #[arg(long, default_value_t = 10)]
    pub workers: usize,

    /// Number of upstream sources.
    #[arg(long, default_value_t = sim::DEFAULT_SOURCES)]
    pub sources: usize,

    /// Zipf exponent of the synthetic workload.
    #[arg(long = "zipf-z", default_value_t = 1.0)]
    pub zipf_z: f64,

    /// Number of distinct keys of the synthetic workload.
    #[arg(long, default_value_t = 10_000)]
    pub keys: usize,

    /// Number of messages of the synthetic workload.
    #[arg(long, default_value_t = 1_000_000)]
    pub messages: u64,

    /// Read keys from a file (one per line) instead of generating them.
    #[arg(long, conflicts_with_all = ["zipf_z", "keys", "messages"])]
    pub input: Option<PathBuf>,

    /// Head threshold [default: 1/(5 * workers)].
    #[arg(long)]
    pub theta: Option<f64>,

    /// Imbalance tolerance used by D-Choices.
    #[arg(long, default_value_t = crate::solver::DEFAULT_EPSILON)]
    pub epsilon: f64,

    /// Seed for the workload and the hash functions.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Messages between imbalance samples.
    #[arg(long = "report-every", default_value_t = sim::DEFAULT_REPORT_EVERY)]
    pub report_every: u64,

    /// Write CSV here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Run every configuration listed in FILE (one line of flags each).
    #[arg(long, value_name = "FILE", conflicts_with_all = [
        "scheme", "workers", "sources", "zipf_z", "keys", "messages",
        "input", "theta", "epsilon", "seed", "report_every",
    ])]
    pub sweep: Option<PathBuf>,
}

fn parse_scheme(s: &str) -> std::result::Result<Scheme, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl Args {
    pub fn to_config(&self) -> Result<SimConfig> {
        let scheme = self
            .scheme
            .ok_or_else(|| Error::usage("--scheme is required"))?;
        let workload = match &self.input {
            Some(path) => Workload::File(path.clone()),
            None => Workload::Zipf(ZipfConfig {
                z: self.zipf_z,
                num_keys: self.keys,
                num_messages: self.messages,
                seed: self.seed,
            }),
        };
        let config = SimConfig {
            scheme,
            workers: self.workers,
            sources: self.sources,
            theta: self.theta,
            epsilon: self.epsilon,
            seed: self.seed,
            report_every: self.report_every,
            workload,
        };
        config.validate()?;
        Ok(config)
    }
}

/// Parses one sweep line (flags only, whitespace separated).
pub fn parse_sweep_line(line: &str) -> Result<SimConfig> {
    let tokens = std::iter::once("slb").chain(line.split_whitespace());
    let args = Args::try_parse_from(tokens).map_err(|e| Error::usage(e.to_string()))?;
    if args.sweep.is_some() || args.out.is_some() {
        return Err(Error::usage(
            "--sweep and --out are not allowed inside a sweep file",
        ));
    }
    args.to_config()
}

/// Reads a sweep file; blank lines and `#` comments are skipped.
pub fn read_sweep_file(path: &std::path::Path) -> Result<Vec<(usize, SimConfig)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut grid = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let config = parse_sweep_line(line)
            .map_err(|e| Error::usage(format!("{} line {}: {e}", path.display(), i + 1)))?;
        grid.push((i + 1, config));
    }
    if grid.is_empty() {
        return Err(Error::usage(format!(
            "{} lists no configurations",
            path.display()
        )));
    }
    Ok(grid)
}

pub fn exit_code(err: &Error) -> i32 {
    if err.is_io() {
        EXIT_IO
    } else {
        EXIT_USAGE
    }
}

fn summarize(result: &RunResult) -> String {
    format!(
        "scheme={} n={} s={} messages={} final_imbalance={} mean_imbalance={} head_size={} d={} memory_units={} mem_pkg={} mem_sg={}",
        result.config.scheme,
        result.config.workers,
        result.config.sources,
        result.messages,
        sim::format_number(result.final_imbalance),
        sim::format_number(result.mean_imbalance),
        result.head_size,
        result.d_final,
        result.memory.actual,
        result.memory.mem_pkg,
        result.memory.mem_sg,
    )
}

fn write_results(out: Option<&PathBuf>, results: &[RunResult]) -> Result<()> {
    match out {
        Some(path) => {
            let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
            sim::write_csv(file, results).map_err(|e| Error::io(path, e))
        }
        None => {
            let stdout = std::io::stdout();
            sim::write_csv(stdout.lock(), results).map_err(|e| Error::io("<stdout>", e))
        }
    }
}

/// Runs the parsed command, reporting progress on `log`. Returns the exit code.
pub fn execute(args: &Args, log: &mut dyn Write) -> i32 {
    match &args.sweep {
        Some(path) => execute_sweep(path, args.out.as_ref(), log),
        None => {
            let outcome = args
                .to_config()
                .and_then(|cfg| sim::run(&cfg))
                .and_then(|result| {
                    write_results(args.out.as_ref(), std::slice::from_ref(&result))?;
                    Ok(result)
                });
            match outcome {
                Ok(result) => {
                    let _ = writeln!(log, "{}", summarize(&result));
                    EXIT_OK
                }
                Err(e) => {
                    let _ = writeln!(log, "error: {e}");
                    exit_code(&e)
                }
            }
        }
    }
}

fn execute_sweep(path: &std::path::Path, out: Option<&PathBuf>, log: &mut dyn Write) -> i32 {
    let grid = match read_sweep_file(path) {
        Ok(g) => g,
        Err(e) => {
            let _ = writeln!(log, "error: {e}");
            return exit_code(&e);
        }
    };
    let configs: Vec<SimConfig> = grid.iter().map(|(_, c)| c.clone()).collect();
    let outcomes = match sim::sweep(&configs) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(log, "error: {e}");
            return exit_code(&e);
        }
    };
    let mut code = EXIT_OK;
    let mut done = Vec::new();
    for ((line, _), outcome) in grid.iter().zip(outcomes) {
        match outcome {
            Ok(result) => {
                let _ = writeln!(log, "line {line}: {}", summarize(&result));
                done.push(result);
            }
            Err(e) => {
                let _ = writeln!(log, "line {line}: error: {e}");
                code = code.max(exit_code(&e));
            }
        }
    }
    if let Err(e) = write_results(out, &done) {
        let _ = writeln!(log, "error: {e}");
        code = code.max(exit_code(&e));
    }
    code
}
