//! Executes configuration points: instance generation, parameter
//! derivation and seeded runs.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rmpe_core::driver::{compute_params, prescale_real, run_rmpe_with, RunOptions, RunParams, RunTrace, REAL_DOMAIN_HI};
use rmpe_core::measurement::{random_model, SpectrumModel};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::{Config, ModelSource};
use crate::error::{CliError, CliResult};

/// One CSV line; the column order is part of the output format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub variant: String,
    #[serde(rename = "S")]
    pub s: usize,
    pub beta: f64,
    pub omega: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub rho: f64,
    pub seed: u64,
    pub success: bool,
    pub failure_reason: String,
    #[serde(rename = "T_max")]
    pub t_max: f64,
    #[serde(rename = "T_total")]
    pub t_total: f64,
    pub steps: usize,
    pub wall_time_ms: f64,
}

pub const CSV_HEADER: [&str; 14] = [
    "variant", "S", "beta", "omega", "delta", "epsilon", "rho", "seed", "success", "failure_reason", "T_max",
    "T_total", "steps", "wall_time_ms",
];

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub row: CsvRow,
    pub trace: RunTrace<f64>,
}

/// A configuration point ready to run: parameters derived once, models
/// fixed or drawn per run.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub config: Config,
    pub params: RunParams<f64>,
    /// Declared (unscaled) values for the CSV.
    pub declared: (usize, f64, f64, f64),
    explicit: Option<SpectrumModel<f64>>,
}

/// Seed of run `index` under `master`.
pub fn run_seed(master: u64, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(u64::MAX - index as u64);
    rng.next_u64()
}

/// Stream for drawing a random instance; disjoint from the sampling streams.
fn instance_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    rng
}

pub fn prepare(config: &Config) -> CliResult<Prepared> {
    config.validate()?;
    let alg = &config.algorithm;
    let real = !config.variant.is_integer();
    match &config.model {
        ModelSource::Explicit(model) => {
            let omega = alg.omega.unwrap_or(model.omega);
            let declared = (model.s(), model.beta, omega, model.delta);
            let needs_scaling = real && model.dominant.iter().any(|s| s.lambda > REAL_DOMAIN_HI);
            let (model, scale) = if needs_scaling { prescale_real(model)? } else { (model.clone(), 1.0) };
            let params = compute_params(
                config.variant,
                alg.epsilon * scale,
                alg.rho,
                model.s(),
                model.beta,
                omega,
                model.delta,
                &alg.overrides,
            )?;
            Ok(Prepared { config: config.clone(), params, declared, explicit: Some(model) })
        }
        ModelSource::Random(spec) => {
            let omega = alg.omega.unwrap_or(spec.omega);
            let params = compute_params(
                config.variant,
                alg.epsilon,
                alg.rho,
                spec.s,
                spec.beta,
                omega,
                spec.delta,
                &alg.overrides,
            )?;
            let mut config = config.clone();
            if real {
                if let ModelSource::Random(r) = &mut config.model {
                    r.domain_hi = r.domain_hi.min(REAL_DOMAIN_HI);
                }
            }
            Ok(Prepared { config, params, declared: (spec.s, spec.beta, omega, spec.delta), explicit: None })
        }
    }
}

impl Prepared {
    pub fn model_for(&self, seed: u64) -> CliResult<SpectrumModel<f64>> {
        match (&self.explicit, &self.config.model) {
            (Some(m), _) => Ok(m.clone()),
            (None, ModelSource::Random(spec)) => Ok(random_model(spec, &mut instance_rng(seed))?),
            (None, ModelSource::Explicit(_)) => unreachable!("explicit models are stored"),
        }
    }

    pub fn run_one(&self, seed: u64) -> CliResult<RunOutcome> {
        let model = self.model_for(seed)?;
        let options = RunOptions { sampler: self.config.sampler, perturbation: None };
        let start = Instant::now();
        let trace = run_rmpe_with(&model, &self.params, seed, &options)?;
        let wall = start.elapsed().as_secs_f64() * 1e3;
        let (s, beta, omega, delta) = self.declared;
        let row = CsvRow {
            variant: self.config.variant.name().to_string(),
            s,
            beta,
            omega,
            delta,
            epsilon: self.config.algorithm.epsilon,
            rho: self.config.algorithm.rho,
            seed,
            success: trace.success,
            failure_reason: trace.failure_reason.map(|r| r.name().to_string()).unwrap_or_default(),
            t_max: trace.t_max,
            t_total: trace.t_total,
            steps: trace.steps.len(),
            wall_time_ms: wall,
        };
        Ok(RunOutcome { row, trace })
    }
}

/// Runs every seeded repetition of one point, `jobs` at a time.
pub fn execute(prepared: &Prepared, master: u64, jobs: usize) -> CliResult<Vec<RunOutcome>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Io(e.to_string()))?;
    let runs = prepared.config.runs;
    pool.install(|| (0..runs).into_par_iter().map(|i| prepared.run_one(run_seed(master, i))).collect())
}

/// One point of a sweep.
#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub index: usize,
    pub settings: BTreeMap<String, Value>,
    pub config: Config,
}

/// Cartesian product of the axes, in axis order (last axis fastest).
pub fn sweep_points(config: &Config) -> CliResult<Vec<SweepPoint>> {
    let axes = match &config.sweep {
        Some(s) if !s.axes.is_empty() => &s.axes,
        _ => return Err(CliError::Config("sweep needs a non-empty sweep.axes list".into())),
    };
    let mut points = vec![(BTreeMap::new(), config.clone())];
    for axis in axes {
        let mut next = Vec::with_capacity(points.len() * axis.values.len());
        for (settings, cfg) in &points {
            for v in &axis.values {
                let mut s: BTreeMap<String, Value> = settings.clone();
                s.insert(axis.name.clone(), v.clone());
                next.push((s, cfg.with_axis(&axis.name, v)?));
            }
        }
        points = next;
    }
    Ok(points.into_iter().enumerate().map(|(index, (settings, config))| SweepPoint { index, settings, config }).collect())
}
