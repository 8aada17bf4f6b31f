use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use egscfo_cli::ess_table::{tabulate, write_table, Range};
use egscfo_cli::report::REPORT_FILE;
use egscfo_cli::{emit_plots, execute, load_plan, AggregateReport};

/// Experiments with trust-aware, game-theoretic cluster head election.
#[derive(Parser)]
#[command(name = "egscfo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every scenario, mode and seed of a plan.
    Run {
        plan: PathBuf,
        /// Output directory.
        #[arg(long, env = "EGSCFO_OUT_DIR", default_value = "out")]
        out: PathBuf,
        /// Parallel runs; all cores by default.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Write plot data files next to a report.
    Plot { report: PathBuf },
    /// Tabulate the stable head probability.
    SweepEss {
        /// Player counts.
        #[arg(long, default_value = "2:12")]
        n: Range,
        /// Head over member energy ratio.
        #[arg(long, default_value = "6")]
        w: Range,
        /// Mean trust in suspicious neighbours.
        #[arg(long, default_value = "0:1:0.1")]
        tavr: Range,
    },
    /// Check a plan without running it.
    Validate { plan: PathBuf },
}

fn plots_dir(report: &Path) -> PathBuf {
    report.parent().unwrap_or(Path::new(".")).join("plots")
}

fn main() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Run { plan, out, jobs } => {
            let plan = load_plan(&plan)?;
            let report = execute(&plan, &out, jobs)?;
            println!(
                "{} runs completed, {} failed; report in {}",
                report.runs.len(),
                report.failures.len(),
                out.join(REPORT_FILE).display()
            );
            for f in &report.failures {
                eprintln!("failed: {} {} seed {}: {}", f.scenario, f.mode, f.seed, f.error);
            }
            Ok(if report.failures.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Plot { report } => {
            let loaded = AggregateReport::read(&report)?;
            let dir = plots_dir(&report);
            let files = emit_plots(&loaded, &dir).context("cannot write plot data")?;
            println!("{} plot files in {}", files.len(), dir.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::SweepEss { n, w, tavr } => {
            let rows = tabulate(n, w, tavr)?;
            write_table(&rows, std::io::stdout().lock())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { plan } => {
            let plan = load_plan(&plan)?;
            let scenarios = plan.scenarios().len();
            println!(
                "plan `{}` is valid: {scenarios} scenarios x {} modes x {} seeds = {} runs",
                plan.name,
                plan.modes.len(),
                plan.seeds.len(),
                plan.runs().len()
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}
