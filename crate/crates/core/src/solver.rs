//! Number of choices for head keys.
//!
//! For a head with probabilities `p_1 >= ... >= p_H`, tail mass `T`, `n`
//! workers and tolerance `eps`, a number of choices `d` is feasible when for
//! every prefix length `h`:
//!
//! ```text
//! sum_{i<=h} p_i + (b_h/n)^d * sum_{h<i<=H} p_i + (b_h/n)^2 * T <= b_h * (1/n + eps)
//! b_h = n - n * ((n-1)/n)^(h*d)
//! ```
//!
//! `b_h` is the expected number of distinct workers hit by `h*d` uniform
//! placements. The search starts at `max(2, ceil(p_1 * n))` and walks upward;
//! reaching `n` means every worker is needed for the head.

use std::fmt;

use crate::error::{Error, Result};

/// Tolerance on `sum(head) + tail == 1`.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Default imbalance tolerance.
pub const DEFAULT_EPSILON: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq)]
pub struct SolverInput {
    head_probs: Vec<f64>,
    tail_mass: f64,
    workers: usize,
    epsilon: f64,
}

impl SolverInput {
    /// Validated input. `head_probs` must be nonincreasing and, together with
    /// `tail_mass`, sum to 1.
    pub fn new(head_probs: Vec<f64>, tail_mass: f64, workers: usize, epsilon: f64) -> Result<Self> {
        if workers == 0 {
            return Err(Error::usage("solver needs at least one worker"));
        }
        if !epsilon.is_finite() || epsilon <= 0.0 {
            return Err(Error::usage(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        if head_probs.iter().any(|p| !(0.0..=1.0).contains(p)) || !(0.0..=1.0).contains(&tail_mass)
        {
            return Err(Error::usage("probabilities must lie in [0, 1]"));
        }
        if head_probs.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::usage("head probabilities must be nonincreasing"));
        }
        let mass: f64 = head_probs.iter().sum::<f64>() + tail_mass;
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::usage(format!(
                "head and tail mass must sum to 1, got {mass}"
            )));
        }
        Ok(SolverInput {
            head_probs,
            tail_mass,
            workers,
            epsilon,
        })
    }

    /// Builds an input from estimated head frequencies, which may overshoot 1
    /// in total. The head is sorted, rescaled to sum at most 1, and the tail
    /// takes whatever mass remains.
    pub fn from_estimates(mut head_probs: Vec<f64>, workers: usize, epsilon: f64) -> Result<Self> {
        if head_probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::usage(
                "estimated probabilities must be finite and nonnegative",
            ));
        }
        head_probs.sort_by(|a, b| b.total_cmp(a));
        let sum: f64 = head_probs.iter().sum();
        if sum > 1.0 {
            for p in &mut head_probs {
                *p /= sum;
            }
        }
        let sum: f64 = head_probs.iter().sum();
        let tail_mass = (1.0 - sum).max(0.0);
        // after rescaling a single p can exceed 1 by an ulp
        for p in &mut head_probs {
            *p = p.min(1.0);
        }
        Self::new(head_probs, tail_mass, workers, epsilon)
    }

    pub fn head_probs(&self) -> &[f64] {
        &self.head_probs
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn head_len(&self) -> usize {
        self.head_probs.len()
    }
}

/// How many workers a head key may use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum HeadChoices {
    /// Greedy-d over `d` hash choices.
    Choices(usize),
    /// Least loaded among every worker.
    AllWorkers,
}

impl HeadChoices {
    /// Effective number of workers a key may reach.
    pub fn width(self, workers: usize) -> usize {
        match self {
            HeadChoices::Choices(d) => d,
            HeadChoices::AllWorkers => workers,
        }
    }
}

impl fmt::Display for HeadChoices {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HeadChoices::Choices(d) => write!(f, "{d}"),
            HeadChoices::AllWorkers => f.write_str("all"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SolverOutput {
    pub decision: HeadChoices,
    pub constraints_checked: usize,
}

/// Expected number of distinct slots filled by `h * d` uniform placements
/// with replacement into `n` slots.
pub fn expected_workers(h: usize, d: usize, n: usize) -> f64 {
    let n_f = n as f64;
    let placements = h as f64 * d as f64;
    n_f - n_f * ((n_f - 1.0) / n_f).powf(placements)
}

fn holds(
    prefix_mass: f64,
    rest_head_mass: f64,
    tail_mass: f64,
    h: usize,
    d: usize,
    n: usize,
    epsilon: f64,
) -> bool {
    let b_h = expected_workers(h, d, n);
    let covered = b_h / n as f64;
    let lhs = prefix_mass + covered.powf(d as f64) * rest_head_mass + covered * covered * tail_mass;
    lhs <= b_h * (1.0 / n as f64 + epsilon)
}

/// Evaluates the constraint for the prefix of the `h` most frequent head keys
/// (`1 <= h <= |head|`).
pub fn prefix_constraint(input: &SolverInput, h: usize, d: usize) -> Result<bool> {
    let len = input.head_len();
    if h == 0 || h > len {
        return Err(Error::usage(format!(
            "prefix length {h} out of range 1..={len}"
        )));
    }
    if d == 0 {
        return Err(Error::usage("number of choices must be positive"));
    }
    let prefix: f64 = input.head_probs[..h].iter().sum();
    let rest: f64 = input.head_probs[h..].iter().sum();
    Ok(holds(
        prefix,
        rest,
        input.tail_mass,
        h,
        d,
        input.workers,
        input.epsilon,
    ))
}

/// Smallest `d` in `[max(2, ceil(p_1 n)), n)` satisfying every prefix
/// constraint, or [`HeadChoices::AllWorkers`] when none does. An empty head
/// keeps the default two choices.
pub fn find_optimal_choices(input: &SolverInput) -> SolverOutput {
    let n = input.workers;
    let probs = &input.head_probs;
    if probs.is_empty() {
        return SolverOutput {
            decision: HeadChoices::Choices(2),
            constraints_checked: 0,
        };
    }

    // prefix[h] = p_1 + ... + p_h
    let mut prefix = Vec::with_capacity(probs.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for p in probs {
        acc += p;
        prefix.push(acc);
    }
    let head_mass = acc;

    let lower = ((probs[0] * n as f64) - 1e-12).ceil().max(2.0) as usize;
    let mut checked = 0;
    for d in lower..n {
        let feasible = (1..=probs.len()).all(|h| {
            checked += 1;
            holds(
                prefix[h],
                head_mass - prefix[h],
                input.tail_mass,
                h,
                d,
                n,
                input.epsilon,
            )
        });
        if feasible {
            return SolverOutput {
                decision: HeadChoices::Choices(d),
                constraints_checked: checked,
            };
        }
    }
    SolverOutput {
        decision: HeadChoices::AllWorkers,
        constraints_checked: checked,
    }
}
