//! Batch execution of independent scenarios, data-parallel when the
//! `parallel` feature is enabled.

use crate::scenario::runner::{run_scenario, SimTrace};
use crate::scenario::{ScenarioConfig, ScenarioError};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Runs every scenario on the current thread, results in input order.
pub fn run_batch_sequential(
    configs: &[ScenarioConfig],
) -> Vec<Result<SimTrace, ScenarioError>> {
    configs.iter().map(run_scenario).collect()
}

/// Runs the scenarios across the rayon thread pool, results in input order.
#[cfg(feature = "parallel")]
pub fn run_batch_parallel(configs: &[ScenarioConfig]) -> Vec<Result<SimTrace, ScenarioError>> {
    configs.par_iter().map(run_scenario).collect()
}

/// Runs a batch with the best strategy compiled in: data-parallel under the
/// `parallel` feature, sequential otherwise. Each scenario is independent,
/// so the results are identical either way.
pub fn run_batch(configs: &[ScenarioConfig]) -> Vec<Result<SimTrace, ScenarioError>> {
    #[cfg(feature = "parallel")]
    {
        run_batch_parallel(configs)
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_batch_sequential(configs)
    }
}
