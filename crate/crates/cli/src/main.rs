use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use cdexplore_experiments::{
    run_balance_sweep, run_plan, summarize, summarize_dir, ExperimentPlan,
};
use clap::{Parser, Subcommand};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(
    name = "explore",
    version,
    about = "Explore parameter spaces of pattern-forming systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (method, seed) pair of a plan and write the result bundle.
    Run {
        #[arg(long)]
        plan: PathBuf,
        /// Overrides the plan's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the per-method table for a finished result directory.
    Summarize { dir: PathBuf },
    /// Run NRAB once per balance value listed in the plan.
    SweepBalance {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve interactive sessions over HTTP.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
    },
}

fn load(plan: &Path, out: Option<PathBuf>) -> Result<ExperimentPlan> {
    let mut p = ExperimentPlan::from_path(plan)
        .with_context(|| format!("reading plan {}", plan.display()))?;
    if let Some(out) = out {
        p.output_dir = out;
    }
    Ok(p)
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .init();
    match Cli::parse().command {
        Command::Run { plan, out } => {
            let plan = load(&plan, out)?;
            let bundle = run_plan(&plan)?;
            tracing::info!(dir = %bundle.output_dir.display(), runs = bundle.runs.len(), "plan finished");
            print!("{}", summarize(&bundle));
        }
        Command::Summarize { dir } => {
            print!(
                "{}",
                summarize_dir(&dir).with_context(|| format!("summarizing {}", dir.display()))?
            );
        }
        Command::SweepBalance { plan, out } => {
            let plan = load(&plan, out)?;
            let bundle = run_balance_sweep(&plan)?;
            tracing::info!(dir = %bundle.output_dir.display(), runs = bundle.runs.len(), "sweep finished");
            print!("{}", summarize(&bundle));
        }
        Command::Serve { addr } => {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind(addr)
                    .await
                    .with_context(|| format!("binding {addr}"))?;
                tracing::info!(%addr, "listening");
                cdexplore_service::serve(listener).await.context("serving")
            })?;
        }
    }
    Ok(())
}
