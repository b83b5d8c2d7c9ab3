//! `smcf`: run, sweep and verify space-like contact-angle flow scenarios.
//!
//! Exit codes: 0 success, 1 a run did not converge or a check failed,
//! 2 usage or runtime error. `SMCF_WORKERS` sets the sweep worker count.

mod artifacts;
mod check;
mod run;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use artifacts::{write_json, RunManifest, RunStatus};

#[derive(Parser)]
#[command(name = "smcf", version, about = "Space-like mean curvature flow with prescribed contact angle")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum RunArg {
    Flow,
    Translator,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the flow to its translating limit.
    Flow {
        config: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Solve for the translating solution by eps-continuation.
    Translator {
        config: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run all applicable checks on stored runs.
    Verify {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        /// Directory for report.json and summary.txt.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a scenario template over a parameter grid, e.g. `--grid n=32,64,128`.
    Sweep {
        template: PathBuf,
        #[arg(long = "grid", required = true)]
        grid: Vec<String>,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, value_enum, default_value = "translator")]
        run: RunArg,
    },
}

fn status_code(m: &RunManifest) -> ExitCode {
    match m.status {
        RunStatus::Converged => ExitCode::SUCCESS,
        RunStatus::NotConverged => ExitCode::from(1),
        RunStatus::Failed => ExitCode::from(2),
    }
}

fn summarize(m: &RunManifest) {
    println!("status: {:?}", m.status);
    for (k, v) in &m.diagnostics {
        println!("{k:<20} {v:.10e}");
    }
    if let Some(e) = &m.error {
        eprintln!("error: {e}");
    }
}

fn workers() -> Result<Option<usize>> {
    match std::env::var("SMCF_WORKERS") {
        Ok(v) => {
            let n: usize = v.trim().parse().with_context(|| format!("SMCF_WORKERS=`{v}` is not a count"))?;
            Ok(Some(n.max(1)))
        }
        Err(_) => Ok(None),
    }
}

fn execute(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Flow { config, output } => {
            let m = run::cmd_flow(&run::load_scenario(&config)?, &output)?;
            summarize(&m);
            Ok(status_code(&m))
        }
        Command::Translator { config, output } => {
            let m = run::cmd_translator(&run::load_scenario(&config)?, &output)?;
            summarize(&m);
            Ok(status_code(&m))
        }
        Command::Verify { dirs, output } => {
            let report = check::cmd_verify(&dirs)?;
            let table = report.summary_table();
            print!("{table}");
            for s in &report.evo_du_studies {
                for c in s.conventions.iter().filter(|c| c.converges) {
                    println!("evo-du converging convention: {}", c.label);
                }
            }
            if let Some(dir) = output {
                std::fs::create_dir_all(&dir)?;
                write_json(&dir.join("report.json"), &report)?;
                std::fs::write(dir.join("summary.txt"), table)?;
            }
            Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Sweep { template, grid, output, run } => {
            let template = run::load_scenario(&template)?;
            let axes = grid.iter().map(|g| sweep::parse_axis(g)).collect::<Result<Vec<_>>>()?;
            let run = match run {
                RunArg::Flow => sweep::SweepRun::Flow,
                RunArg::Translator => sweep::SweepRun::Translator,
                RunArg::Both => sweep::SweepRun::Both,
            };
            let mut pool = rayon::ThreadPoolBuilder::new();
            if let Some(n) = workers()? {
                pool = pool.num_threads(n);
            }
            let pool = pool.build()?;
            let table = pool.install(|| sweep::cmd_sweep(&template, &axes, run, &output))?;
            let ok = table.column("ok")?;
            let all_ok = table.rows.iter().all(|r| r[ok] == Some(1.0));
            println!("{} points written to {}", table.rows.len(), output.join("summary.csv").display());
            Ok(if all_ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
