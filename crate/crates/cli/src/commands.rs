//! The four subcommands, returning data; `main` does the printing.

use std::path::{Path, PathBuf};

use rmpe_core::audit::{run_audit, AuditConfig, AuditKind, AuditReport};
use rmpe_core::driver::{first_divergence, replay, RunTrace, TRACE_VERSION};

use crate::config::Config;
use crate::error::{CliError, CliResult};
use crate::output::{self, fit_axes, summarize_point, SweepSummary};
use crate::runner::{execute, prepare, sweep_points, CsvRow};

pub const SEED_ENV: &str = "RMPE_SEED";

/// Flags shared by `run` and `sweep`.
#[derive(Clone, Debug, Default)]
pub struct RunFlags {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub trace: bool,
    pub out: Option<PathBuf>,
    pub append: bool,
}

/// `--seed`, then the config's `seed`, then `RMPE_SEED`, then 0.
pub fn resolve_seed(flag: Option<u64>, config: Option<u64>) -> CliResult<u64> {
    if let Some(s) = flag.or(config) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| CliError::Config(format!("{SEED_ENV}={v:?} is not a u64"))),
        Err(_) => Ok(0),
    }
}

fn jobs(flag: Option<usize>) -> usize {
    flag.unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

fn out_dir(cfg: &Config, flags: &RunFlags) -> PathBuf {
    flags.out.clone().unwrap_or_else(|| cfg.output.dir.clone())
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub rows: Vec<CsvRow>,
    pub csv: PathBuf,
    pub traces: Vec<PathBuf>,
}

pub fn cmd_run(config_path: &Path, flags: &RunFlags) -> CliResult<RunResult> {
    let cfg = Config::load(config_path)?;
    let seed = resolve_seed(flags.seed, cfg.seed)?;
    let prepared = prepare(&cfg)?;
    let outcomes = execute(&prepared, seed, jobs(flags.jobs))?;
    let dir = out_dir(&cfg, flags);
    let csv = dir.join(&cfg.output.csv);
    let rows: Vec<CsvRow> = outcomes.iter().map(|o| o.row.clone()).collect();
    output::write_csv(&csv, &rows, flags.append)?;
    let traces = if flags.trace { output::write_traces(&dir.join(&cfg.output.traces), "", &outcomes)? } else { Vec::new() };
    Ok(RunResult { rows, csv, traces })
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub summary: SweepSummary,
    pub csv: PathBuf,
    pub summary_path: PathBuf,
    pub traces: Vec<PathBuf>,
}

/// Runs every point of the sweep. Each point reuses the master seed, so
/// points differ only by their settings.
pub fn cmd_sweep(config_path: &Path, flags: &RunFlags) -> CliResult<SweepResult> {
    let cfg = Config::load(config_path)?;
    let seed = resolve_seed(flags.seed, cfg.seed)?;
    let points = sweep_points(&cfg)?;
    // Fail before running anything if any point is infeasible.
    let prepared = points.iter().map(|p| prepare(&p.config)).collect::<CliResult<Vec<_>>>()?;
    let dir = out_dir(&cfg, flags);
    let jobs = jobs(flags.jobs);
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    let mut traces = Vec::new();
    for (point, prep) in points.iter().zip(&prepared) {
        let outcomes = execute(prep, seed, jobs)?;
        summaries.push(summarize_point(point, &outcomes));
        rows.extend(outcomes.iter().map(|o| o.row.clone()));
        if flags.trace {
            let prefix = format!("p{:03}_", point.index);
            traces.extend(output::write_traces(&dir.join(&cfg.output.traces), &prefix, &outcomes)?);
        }
    }
    let csv = dir.join(&cfg.output.csv);
    output::write_csv(&csv, &rows, flags.append)?;
    let summary = SweepSummary { fits: fit_axes(&summaries), points: summaries };
    let summary_path = dir.join(&cfg.output.summary);
    output::write_json(&summary_path, &summary)?;
    Ok(SweepResult { summary, csv, summary_path, traces })
}

/// Runs the selected audits; see [`audit_verdict`] for the outcome.
pub fn cmd_audit(which: &str, cfg: &AuditConfig) -> CliResult<Vec<AuditReport>> {
    let kinds: Vec<AuditKind> =
        if which == "all" { AuditKind::ALL.to_vec() } else { vec![which.parse::<AuditKind>()?] };
    let reports = kinds.into_iter().map(|k| run_audit(k, cfg)).collect::<Result<Vec<_>, _>>()?;
    Ok(reports)
}

/// Writes the failing reports to `out` (or `audit-counterexamples.json`)
/// and returns the matching error, if any.
pub fn audit_verdict(reports: &[AuditReport], out: Option<&Path>) -> CliResult<()> {
    let bad: Vec<&AuditReport> = reports.iter().filter(|r| !r.ok()).collect();
    if bad.is_empty() {
        return Ok(());
    }
    let path = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("audit-counterexamples.json"));
    output::write_json(&path, &bad)?;
    let n: usize = bad.iter().map(|r| r.counterexamples.len()).sum();
    let names: Vec<&str> = bad.iter().map(|r| r.kind.name()).collect();
    Err(CliError::Counterexample(format!("{n} in {names:?}, written to {}", path.display())))
}

#[derive(Clone, Debug)]
pub struct ReplayResult {
    /// Set when the trace was written by another version.
    pub version_warning: Option<String>,
    pub steps: usize,
    pub success: bool,
}

pub fn load_trace(path: &Path) -> CliResult<RunTrace<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn cmd_replay(path: &Path) -> CliResult<ReplayResult> {
    let trace = load_trace(path)?;
    let version_warning = (trace.version != TRACE_VERSION)
        .then(|| format!("trace written by version {}, replaying with {TRACE_VERSION}", trace.version));
    let again = replay(&trace)?;
    if let Some(step) = first_divergence(&trace, &again) {
        let detail = match (trace.steps.get(step), again.steps.get(step)) {
            (Some(a), Some(b)) => format!(
                "step {step}: recorded m={} M={}, recomputed m={} M={}",
                a.factor, a.m_total, b.factor, b.m_total
            ),
            _ => format!(
                "step {step}: recorded {} steps (success={}), recomputed {} (success={})",
                trace.steps.len(),
                trace.success,
                again.steps.len(),
                again.success
            ),
        };
        return Err(CliError::Divergence(detail));
    }
    Ok(ReplayResult { version_warning, steps: again.steps.len(), success: again.success })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_precedence() {
        assert_eq!(resolve_seed(Some(1), Some(2)).unwrap(), 1);
        assert_eq!(resolve_seed(None, Some(2)).unwrap(), 2);
    }

    #[test]
    fn counterexamples_exit_3_and_are_written() {
        use rmpe_core::audit::Counterexample;
        let dir = tempfile::tempdir().unwrap();
        let cfg = AuditConfig { trials: 5, ..AuditConfig::default() };
        let mut reports = cmd_audit("lemma-prime", &cfg).unwrap();
        assert!(audit_verdict(&reports, None).is_ok());
        reports[0].counterexamples.push(Counterexample { trial: 3, detail: "forged".into() });
        let path = dir.path().join("cx.json");
        let e = audit_verdict(&reports, Some(&path)).unwrap_err();
        assert_eq!(e.exit_code(), 3);
        let back: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(back[0]["counterexamples"][0]["detail"], "forged");
    }

    #[test]
    fn unknown_audit_is_a_config_error() {
        let e = cmd_audit("lemma-x", &AuditConfig::default()).unwrap_err();
        assert_eq!(e.exit_code(), 1);
    }
}
