use std::fs::File;
use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nclab::{emit_report, parse_config, run_all, Format, RunError, RunOptions, DEFAULT_MAX_DIM};

#[derive(Parser)]
#[command(name = "nclab", version, about = "Run operator-algebra experiments from a JSON config")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every experiment in a config file and emit the report.
    Run {
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Report destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the seeds in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Largest matrix dimension an experiment may build.
        #[arg(long, env = "NCLAB_MAX_DIM", default_value_t = DEFAULT_MAX_DIM)]
        max_dim: usize,
    },
}

fn run(cli: Cli) -> Result<i32, RunError> {
    let Command::Run { config, format, out, seed, max_dim } = cli.command;
    let text = std::fs::read_to_string(&config)
        .map_err(|e| RunError::Schema(format!("cannot read {}: {e}", config.display())))?;
    let cfg = parse_config(&text)?;
    let opts = RunOptions { seed, max_dim, ..RunOptions::default() };
    let report = run_all(&cfg, &opts)?;
    match out {
        Some(path) => {
            let f = File::create(&path).map_err(|e| RunError::Output(format!("{}: {e}", path.display())))?;
            emit_report(&report, format, &mut BufWriter::new(f))?;
        }
        None => emit_report(&report, format, &mut io::stdout().lock())?,
    }
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("nclab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
