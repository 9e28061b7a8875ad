use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vertexset_cli::{parse_config, run, CliError, ConfigError, RunConfig};

/// Vertex sets of level curves near umbilic points.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    action: Action,
}

#[derive(Subcommand)]
enum Action {
    /// Run the command described by a TOML configuration file.
    Run {
        config: PathBuf,
        /// Write artifacts here instead of `[output] dir`.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Validate a configuration file without running it.
    Check { config: PathBuf },
    /// Run an acceptance suite: oracle, jets, branches, discriminant, cup or all.
    Verify {
        #[arg(default_value = "all")]
        suite: String,
    },
}

fn load(path: &PathBuf) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    Ok(parse_config(&text)?)
}

fn execute(action: Action) -> Result<(), CliError> {
    let report = match action {
        Action::Run { config, out_dir } => run(&load(&config)?, out_dir.as_deref())?,
        Action::Check { config } => {
            let cfg = load(&config)?;
            println!("ok: {} ({})", config.display(), cfg.command);
            return Ok(());
        }
        Action::Verify { suite } => {
            let cfg = parse_config(&format!("command = \"verify\"\n[scan]\nsuite = {suite:?}\n"))?;
            run(&cfg, None)?
        }
    };
    for line in &report.lines {
        println!("{line}");
    }
    for f in &report.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse().action) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if let CliError::Verification { lines, .. } = &e {
                for l in lines {
                    println!("{l}");
                }
            }
            let record = e.record();
            eprintln!("{}", serde_json::to_string(&record).expect("plain record serializes"));
            ExitCode::from(record.code)
        }
    }
}
