use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Result};
use clap::{Parser, Subcommand};
use gpargmax_cli::{catalog, config, run, RunConfig, Status};

#[derive(Parser)]
#[command(name = "gpargmax", version, about = "Argmax laws of Gaussian limit processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config.
    Run {
        /// Config path or bundled config name.
        #[arg(value_name = "CONFIG", conflicts_with = "config")]
        positional: Option<String>,
        #[arg(long)]
        config: Option<String>,
        /// Output directory (default: the config's `out`, else `results/<name>`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker thread cap.
        #[arg(long)]
        threads: Option<usize>,
        /// Multiplies every absolute tolerance.
        #[arg(long)]
        tolerance_scale: Option<f64>,
    },
    /// List the bundled configs.
    ListExperiments,
    /// Print a bundled config.
    ShowConfig { name: String },
}

fn resolve(arg: &str) -> Result<RunConfig> {
    let path = Path::new(arg);
    if path.exists() {
        config::load(path)
    } else if catalog::source(arg).is_some() {
        catalog::load(arg)
    } else {
        Err(anyhow!("{arg}: no such file and no bundled config by that name"))
    }
}

#[cfg(feature = "parallel")]
fn set_threads(n: usize) -> Result<()> {
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn set_threads(_: usize) -> Result<()> {
    Ok(())
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(status) => ExitCode::from(status.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<Status> {
    match cli.command {
        Command::Run { positional, config, out, seed, threads, tolerance_scale } => {
            let arg = positional.or(config).ok_or_else(|| anyhow!("give a config path or bundled name"))?;
            let mut cfg = resolve(&arg)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(scale) = tolerance_scale {
                cfg.tolerance_scale = scale;
            }
            config::validate(&cfg)?;
            if let Some(n) = threads {
                if n == 0 {
                    return Err(anyhow!("--threads must be at least 1"));
                }
                set_threads(n)?;
            }
            let out = out.or_else(|| cfg.out.clone()).unwrap_or_else(|| Path::new("results").join(&cfg.name));
            let summary = run::run(&cfg, &out)?;
            for c in &summary.checks {
                println!("{:<12} {}: {}", format!("{:?}", c.status).to_uppercase(), c.name, c.detail);
            }
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
            println!("{}: {:?} ({})", summary.name, summary.status, out.display());
            Ok(summary.status)
        }
        Command::ListExperiments => {
            for e in catalog::entries()? {
                println!("{:<22} {:<5} {:<22} {}", e.name, e.criterion, e.kind, e.description);
            }
            Ok(Status::Pass)
        }
        Command::ShowConfig { name } => {
            print!("{}", catalog::source(&name).ok_or_else(|| anyhow!("no bundled config named `{name}`"))?);
            Ok(Status::Pass)
        }
    }
}
