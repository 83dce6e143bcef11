//! Files written by the commands: CSV rows, JSON traces, sweep summaries.
//! Every file is written to a temporary sibling and renamed into place.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::{CliError, CliResult};
use crate::runner::{CsvRow, RunOutcome, SweepPoint, CSV_HEADER};

pub fn atomic_write(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let name = path.file_name().ok_or_else(|| CliError::Io(format!("not a file path: {}", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_json<V: Serialize>(path: &Path, value: &V) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    atomic_write(path, text.as_bytes())
}

/// Writes `rows`, after the existing rows of `path` when `append` is set.
/// Appending to a file with a different header is refused.
pub fn write_csv(path: &Path, rows: &[CsvRow], append: bool) -> CliResult<()> {
    let mut existing = Vec::new();
    if append && path.exists() {
        existing = read_csv(path)?;
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in existing.iter().chain(rows) {
        w.serialize(r)?;
    }
    if existing.is_empty() && rows.is_empty() {
        w.write_record(CSV_HEADER)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    atomic_write(path, &bytes)
}

pub fn read_csv(path: &Path) -> CliResult<Vec<CsvRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(CliError::Io(format!("{} has header {header:?}, expected {CSV_HEADER:?}", path.display())));
    }
    r.deserialize().map(|row| row.map_err(CliError::from)).collect()
}

pub fn write_traces(dir: &Path, prefix: &str, outcomes: &[RunOutcome]) -> CliResult<Vec<std::path::PathBuf>> {
    outcomes
        .iter()
        .enumerate()
        .map(|(i, o)| {
            let path = dir.join(format!("{prefix}run{i:04}.json"));
            write_json(&path, &o.trace)?;
            Ok(path)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointSummary {
    pub index: usize,
    pub settings: BTreeMap<String, Value>,
    pub runs: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Means over successful runs.
    #[serde(rename = "mean_T_max")]
    pub mean_t_max: Option<f64>,
    #[serde(rename = "mean_T_total")]
    pub mean_t_total: Option<f64>,
}

/// Least-squares slope of `log y` against `log x` along one axis.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Fit {
    pub axis: String,
    /// The abscissa: `1/epsilon` for the epsilon axis, the axis value otherwise.
    pub x: String,
    pub fixed: BTreeMap<String, Value>,
    pub points: usize,
    #[serde(rename = "slope_T_total")]
    pub slope_t_total: f64,
    #[serde(rename = "slope_T_max")]
    pub slope_t_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepSummary {
    pub points: Vec<PointSummary>,
    pub fits: Vec<Fit>,
}

pub fn summarize_point(point: &SweepPoint, outcomes: &[RunOutcome]) -> PointSummary {
    let ok: Vec<&CsvRow> = outcomes.iter().map(|o| &o.row).filter(|r| r.success).collect();
    let mean = |f: fn(&CsvRow) -> f64| (!ok.is_empty()).then(|| ok.iter().map(|r| f(r)).sum::<f64>() / ok.len() as f64);
    PointSummary {
        index: point.index,
        settings: point.settings.clone(),
        runs: outcomes.len(),
        successes: ok.len(),
        success_rate: ok.len() as f64 / outcomes.len().max(1) as f64,
        mean_t_max: mean(|r| r.t_max),
        mean_t_total: mean(|r| r.t_total),
    }
}

/// `(slope, intercept)` of the least-squares line through `(x, y)`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Log-log fits along every numeric axis with at least two values, one fit
/// per combination of the other axes.
pub fn fit_axes(points: &[PointSummary]) -> Vec<Fit> {
    let axes: Vec<String> = points.first().map(|p| p.settings.keys().cloned().collect()).unwrap_or_default();
    let mut fits = Vec::new();
    for axis in axes {
        let mut groups: BTreeMap<String, (BTreeMap<String, Value>, Vec<(f64, f64, f64)>)> = BTreeMap::new();
        for p in points {
            let Some(v) = p.settings.get(&axis).and_then(Value::as_f64) else { continue };
            let (Some(tm), Some(tt)) = (p.mean_t_max, p.mean_t_total) else { continue };
            let x = if axis == "epsilon" { 1.0 / v } else { v };
            let mut fixed = p.settings.clone();
            fixed.remove(&axis);
            let key = serde_json::to_string(&fixed).unwrap_or_default();
            groups.entry(key).or_insert_with(|| (fixed, Vec::new())).1.push((x, tm, tt));
        }
        for (_, (fixed, pts)) in groups {
            if pts.len() < 2 {
                continue;
            }
            let lx: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
            let lm: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
            let lt: Vec<f64> = pts.iter().map(|p| p.2.ln()).collect();
            fits.push(Fit {
                axis: axis.clone(),
                x: if axis == "epsilon" { "1/epsilon".into() } else { axis.clone() },
                fixed,
                points: pts.len(),
                slope_t_total: ls_slope(&lx, &lt),
                slope_t_max: ls_slope(&lx, &lm),
            });
        }
    }
    fits
}
