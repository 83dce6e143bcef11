use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rmpe_cli::commands::{self, RunFlags};
use rmpe_cli::CliResult;
use rmpe_core::audit::AuditConfig;

#[derive(Parser)]
#[command(name = "rmpe", version, about = "Robust multiple-phase estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Experiment configuration (JSON).
    config: PathBuf,
    /// Master seed; overrides the config and RMPE_SEED.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: available cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Write one JSON trace per run.
    #[arg(long)]
    trace: bool,
    /// Output directory (overrides output.dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Append rows to an existing CSV with the same header.
    #[arg(long)]
    append: bool,
}

impl Common {
    fn flags(&self) -> RunFlags {
        RunFlags { seed: self.seed, jobs: self.jobs, trace: self.trace, out: self.out.clone(), append: self.append }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Seeded runs of one configuration.
    Run(Common),
    /// Cartesian sweep over the configured axes, with log-log fits.
    Sweep(Common),
    /// Randomized checks of the guarantees the algorithm relies on.
    Audit {
        /// lemma-m-real, lemma-prime, thm1, cor1, thm2, properties or all.
        #[arg(long, default_value = "all")]
        which: String,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of centers or eigenvalues; random when omitted.
        #[arg(long)]
        t: Option<usize>,
        /// Noise as a multiple of the default level (thm1, cor1).
        #[arg(long, default_value_t = 1.0)]
        alpha_scale: f64,
        /// Where counterexamples are written.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-execute a trace and compare it step by step.
    Replay { trace: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rmpe: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::Run(c) => {
            let r = commands::cmd_run(&c.config, &c.flags())?;
            let ok = r.rows.iter().filter(|r| r.success).count();
            println!("{} runs, {ok} succeeded; rows in {}", r.rows.len(), r.csv.display());
            if !r.traces.is_empty() {
                println!("{} traces written", r.traces.len());
            }
        }
        Command::Sweep(c) => {
            let r = commands::cmd_sweep(&c.config, &c.flags())?;
            for p in &r.summary.points {
                println!(
                    "point {:3} {} success {:.3} mean T_max {}",
                    p.index,
                    serde_json::to_string(&p.settings).unwrap_or_default(),
                    p.success_rate,
                    p.mean_t_max.map_or("-".into(), |v| format!("{v:.4e}"))
                );
            }
            for f in &r.summary.fits {
                println!(
                    "fit {} vs {} {}: slope T_total {:.3}, T_max {:.3}",
                    f.axis,
                    f.x,
                    serde_json::to_string(&f.fixed).unwrap_or_default(),
                    f.slope_t_total,
                    f.slope_t_max
                );
            }
            println!("summary in {}", r.summary_path.display());
        }
        Command::Audit { which, trials, seed, t, alpha_scale, out } => {
            let cfg = AuditConfig { trials, seed, t, alpha_scale };
            let reports = commands::cmd_audit(&which, &cfg)?;
            for r in &reports {
                println!(
                    "{:<13} trials {} passed {} skipped {} counterexamples {}{}",
                    r.kind.name(),
                    r.trials,
                    r.passed,
                    r.skipped,
                    r.counterexamples.len(),
                    r.note.as_ref().map_or(String::new(), |n| format!(" ({n})"))
                );
                for c in r.counterexamples.iter().take(3) {
                    println!("  trial {}: {}", c.trial, c.detail);
                }
            }
            commands::audit_verdict(&reports, out.as_deref())?;
        }
        Command::Replay { trace } => {
            let r = commands::cmd_replay(&trace)?;
            if let Some(w) = r.version_warning {
                eprintln!("rmpe: warning: {w}");
            }
            println!("replay matches: {} steps, success={}", r.steps, r.success);
        }
    }
    Ok(())
}
