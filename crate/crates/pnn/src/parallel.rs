//! Worker-pool execution of grid search and GPR tuning. Results are gathered
//! by index, so output does not depend on the number of workers.

use std::time::Instant;

use pnn_core::gpr::{best_tuning_row, check_tuning_grid, tune_cell, GprTuning};
use pnn_core::modelsel::{EmpiricalStats, GridPlan};
use pnn_core::{Dataset, GridResult};
use rayon::prelude::*;

use crate::error::{CliError, Result};

pub fn default_jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    if jobs == 0 {
        return Err(CliError::validation("jobs must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Numerical(format!("cannot start worker pool: {e}")))
}

pub fn run_grid(plan: &GridPlan<'_>, jobs: usize, timing: bool) -> Result<GridResult> {
    let runs = plan.runs();
    let outcomes = pool(jobs)?.install(|| {
        runs.par_iter()
            .map(|run| {
                let start = Instant::now();
                let mut outcome = plan.execute(run);
                log::info!(
                    "run depth={} width={} seed={}: {} {:?}",
                    run.depth,
                    run.width,
                    run.seed,
                    outcome.status.as_str(),
                    outcome.kl
                );
                if timing {
                    outcome.seconds = Some(start.elapsed().as_secs_f64());
                }
                outcome
            })
            .collect()
    });
    Ok(plan.finish(outcomes))
}

pub fn run_tuning(
    train: &Dataset,
    test: &EmpiricalStats,
    length_scale_bounds: &[f64],
    noise_grid: &[f64],
    jobs: usize,
) -> Result<GprTuning> {
    check_tuning_grid(length_scale_bounds, noise_grid)?;
    let cells: Vec<(f64, f64)> = length_scale_bounds
        .iter()
        .flat_map(|&b| noise_grid.iter().map(move |&s| (b, s)))
        .collect();
    let rows: Vec<_> = pool(jobs)?.install(|| cells.par_iter().map(|&(b, s)| tune_cell(train, test, b, s)).collect());
    let best = best_tuning_row(&rows);
    Ok(GprTuning { rows, best })
}
