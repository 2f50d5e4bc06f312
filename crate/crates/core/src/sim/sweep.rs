use rayon::prelude::*;

use super::{run, RunResult, SimConfig};
use crate::error::{Error, Result};

/// Runs every configuration, in parallel, returning outcomes in grid order.
/// A failing run does not stop the others.
pub fn sweep(grid: &[SimConfig]) -> Result<Vec<Result<RunResult>>> {
    if grid.is_empty() {
        return Err(Error::usage("sweep grid is empty"));
    }
    Ok(grid.par_iter().map(run).collect())
}
