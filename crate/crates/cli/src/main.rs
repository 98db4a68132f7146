use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use willmore_cli::commands;
use willmore_cli::config::RunConfig;

#[derive(Parser)]
#[command(name = "willmore", version, about = "Willmore flow of closed surfaces")]
struct Cli {
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Flow a scenario and write diagnostics, snapshots and a summary.
    Run {
        config: PathBuf,
        /// Output directory, overriding `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate geometry and verifiers on the initial surface.
    Verify {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Blow-up analysis of the snapshots of a previous run.
    Blowup {
        config: PathBuf,
        /// Directory of the previous run.
        #[arg(long)]
        history: PathBuf,
        /// Output directory, defaults to the history directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(path: &Path, out: Option<PathBuf>) -> Result<(RunConfig, PathBuf)> {
    let cfg = RunConfig::load(path)?;
    let out = out.unwrap_or_else(|| cfg.output.dir.clone());
    Ok((cfg, out))
}

fn main_inner(cli: Cli) -> Result<()> {
    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .context("cannot start thread pool")?;
    }
    match cli.command {
        Command::Run { config, out } => {
            let (cfg, out) = load(&config, out)?;
            let s = commands::run(&cfg, &out)?;
            let status = serde_json::to_value(&s.status)?;
            println!(
                "{} after {} steps, t = {:.6e}, W_H = {:.10} -> {:.10}",
                status["status"].as_str().unwrap_or("?"),
                s.steps,
                s.t,
                s.initial_energy.w_h,
                s.final_energy.w_h
            );
            println!("output in {}", out.display());
        }
        Command::Verify { config, out } => {
            let (cfg, out) = load(&config, out)?;
            let s = commands::verify(&cfg, &out)?;
            println!(
                "W_H = {:.10}, verifiers {}",
                s.final_energy.w_h,
                if s.verifiers_pass { "pass" } else { "FAIL" }
            );
            println!("output in {}", out.display());
        }
        Command::Blowup {
            config,
            history,
            out,
        } => {
            let cfg = RunConfig::load(&config)?;
            let out = out.unwrap_or_else(|| history.clone());
            let r = commands::blowup(&cfg, &history, &out)?;
            println!(
                "{} concentration radii, {} rescaled states, type II indicator increasing: {}",
                r.specs.len(),
                r.rescaled.len(),
                r.type2
            );
            println!("output in {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
