mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "grayspace", version, about = "Gray-space availability around registered TV receivers")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct CommonArgs {
    /// Run configuration (TOML), or a run summary to repeat that run.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master seed; overrides `run.seed`.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Worker threads; 1 runs sequentially, 0 uses every core.
    #[arg(long, global = true, value_name = "N")]
    pub workers: Option<usize>,
    /// Output directory; overrides `run.out`.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Grid resolution in metres.
    #[arg(long, global = true, value_parser = ["100", "1000"])]
    pub resolution: Option<String>,
}

impl CommonArgs {
    pub fn resolution(&self) -> Option<u32> {
        self.resolution.as_deref().and_then(|r| r.parse().ok())
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Protection distances per device, raw and quantized to the grid.
    Linkbudget,
    /// Validate a household grid and apply municipal-area compensation.
    Ingest {
        /// Grid CSV; defaults to the configured grid.
        grid: Option<PathBuf>,
        /// Municipal area in km², overriding the file metadata.
        #[arg(long, value_name = "KM2")]
        municipal_area: Option<f64>,
    },
    /// Run the Monte Carlo simulation for every device and knowledge level.
    Simulate,
    /// Re-derive the survival curve and utilization table from stored maps.
    Report {
        /// Map files (matrix or run-length form); statistics are averaged over them.
        #[arg(required = true)]
        maps: Vec<PathBuf>,
        /// Household grid for the utilization table; defaults to the configured grid.
        #[arg(long, value_name = "PATH")]
        grid: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Linkbudget => commands::linkbudget(&cli.common),
        Command::Ingest { grid, municipal_area } => {
            commands::ingest(&cli.common, grid.as_deref(), municipal_area)
        }
        Command::Simulate => commands::simulate(&cli.common),
        Command::Report { maps, grid } => commands::report(&cli.common, &maps, grid.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("grayspace: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
