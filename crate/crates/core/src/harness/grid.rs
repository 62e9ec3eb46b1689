use rayon::prelude::*;

use crate::active_selection::SelectionStrategy;
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::seeding::SeedMethod;

use super::config::{ExperimentConfig, GridConfig};
use super::{run_experiment_with_id, ExperimentTrace, PreparedCorpus};

/// One experiment of a grid.
#[derive(Debug, Clone)]
pub struct GridCell {
    pub index: usize,
    pub experiment_id: String,
    pub replicate: usize,
    pub config: ExperimentConfig,
}

/// A grid cell that failed, kept so the report can list it.
#[derive(Debug, Clone)]
pub struct CellFailure {
    pub experiment_id: String,
    pub error: String,
    pub exit_code: i32,
}

#[derive(Debug, Default)]
pub struct GridOutcome {
    /// Successful traces in cell order.
    pub traces: Vec<ExperimentTrace>,
    pub failures: Vec<CellFailure>,
}

pub fn experiment_id(method: SeedMethod, strategy: &SelectionStrategy, replicate: usize) -> String {
    format!("{}__{}__r{}", method.name(), strategy, replicate)
}

/// Expands the grid in seed method, strategy, replicate order. Each cell's
/// seed depends only on the master seed and the cell's position.
pub fn grid_cells(grid: &GridConfig) -> Vec<GridCell> {
    let mut cells = Vec::new();
    for &method in &grid.seed_methods {
        for strategy in &grid.strategies {
            for replicate in 0..grid.replicates {
                let index = cells.len();
                let mut params = grid.params.clone();
                params.rng_seed = derive_seed(grid.params.rng_seed, "experiment", index as u64);
                cells.push(GridCell {
                    index,
                    experiment_id: experiment_id(method, strategy, replicate),
                    replicate,
                    config: ExperimentConfig::new(method, *strategy, params),
                });
            }
        }
    }
    cells
}

/// Runs every cell of the grid on `workers` threads. A failing cell does not
/// stop the others.
pub fn run_grid(grid: &GridConfig, prepared: &PreparedCorpus, workers: usize) -> Result<GridOutcome> {
    grid.validate()?;
    let cells = grid_cells(grid);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;
    let results: Vec<(GridCell, Result<ExperimentTrace>)> = pool.install(|| {
        cells
            .into_par_iter()
            .map(|cell| {
                let r = run_experiment_with_id(&cell.config, prepared, &cell.experiment_id, cell.replicate);
                (cell, r)
            })
            .collect()
    });
    let mut outcome = GridOutcome::default();
    for (cell, r) in results {
        match r {
            Ok(t) => outcome.traces.push(t),
            Err(e) => outcome.failures.push(CellFailure {
                experiment_id: cell.experiment_id,
                exit_code: e.category().exit_code(),
                error: e.to_string(),
            }),
        }
    }
    Ok(outcome)
}
