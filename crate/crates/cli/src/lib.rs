//! Experiment runner for the gradient-field spin-chain simulations: TOML
//! configs, seeded parallel disorder ensembles over parameter grids, CSV
//! result tables and plot-ready panel files.

pub mod config;
pub mod error;
pub mod plot;
pub mod presets;
pub mod runner;
pub mod table;

use std::path::{Path, PathBuf};

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
pub use runner::{execute, ResultTable};

/// Overrides applied on top of a config file.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub workers: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
}

/// Files produced by [`run_experiment`].
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub table: ResultTable,
    pub table_path: PathBuf,
    pub plot_paths: Vec<PathBuf>,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Runs `config` with `options`, writes the result table and, if the config
/// names a figure, its plot files.
pub fn run_experiment(config: &ExperimentConfig, options: &RunOptions) -> CliResult<RunOutput> {
    let mut config = config.clone();
    if let Some(seed) = options.seed {
        config.run.master_seed = seed;
    }
    if let Some(dir) = &options.out_dir {
        config.output.directory = dir.to_string_lossy().into_owned();
    }
    let table = execute(&config, options.workers.unwrap_or_else(default_workers))?;
    let dir = Path::new(&config.output.directory);
    let plot_paths = match &config.output.figure {
        Some(fig) => plot::emit_plot_data(&table, fig, dir)?,
        None => Vec::new(),
    };
    let table_path = table::save_table(&table, dir)?;
    Ok(RunOutput { table, table_path, plot_paths })
}
