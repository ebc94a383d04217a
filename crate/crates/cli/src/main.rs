use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gdtc_cli::{presets, run_experiment, CliResult, ExperimentConfig, RunOptions};

#[derive(Parser)]
#[command(name = "gdtc", version, about = "Driven gradient-field spin-chain experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Overrides {
    /// Worker threads (default: available cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory (overrides output.directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed (overrides run.master_seed).
    #[arg(long)]
    seed: Option<u64>,
}

impl Overrides {
    fn options(&self) -> RunOptions {
        RunOptions { workers: self.workers, out_dir: self.out.clone(), seed: self.seed }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Simulate {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Check a config file without running it.
    Validate { config: PathBuf },
    /// Shipped figure presets.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    /// List preset ids with a one-line summary.
    List,
    /// Print a preset's config.
    Show { id: String },
    /// Run a preset.
    Run {
        id: String,
        #[command(flatten)]
        overrides: Overrides,
    },
}

fn simulate(config: &ExperimentConfig, options: &RunOptions) -> CliResult<()> {
    let out = run_experiment(config, options)?;
    println!("wrote {} ({} rows)", out.table_path.display(), out.table.rows.len());
    for p in out.plot_paths {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate { config, overrides } => simulate(&ExperimentConfig::from_file(&config)?, &overrides.options()),
        Command::Validate { config } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            let points = cfg.expand()?.len();
            println!("ok: {} with {points} grid points x {} realizations", cfg.experiment.name(), cfg.run.realizations);
            Ok(())
        }
        Command::Presets { action } => match action {
            PresetAction::List => {
                for (id, text) in presets::PRESETS {
                    println!("{id:<12} {}", presets::summary(text));
                }
                Ok(())
            }
            PresetAction::Show { id } => {
                print!("{}", presets::preset_source(&id)?);
                Ok(())
            }
            PresetAction::Run { id, overrides } => simulate(&presets::preset(&id)?, &overrides.options()),
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
