//! The JSON experiment configuration. See `docs/config.md`.

use std::path::{Path, PathBuf};

use rmpe_core::driver::{EtaRule, Overrides, Variant};
use rmpe_core::measurement::{RandomModelSpec, SamplerOptions, SpectrumModel};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub variant: Variant,
    pub model: ModelSource,
    pub algorithm: AlgorithmBlock,
    /// Seeded runs per configuration point.
    #[serde(default = "default_runs")]
    pub runs: usize,
    /// Master seed; `--seed` wins over it, `RMPE_SEED` loses to it.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub sweep: Option<SweepBlock>,
    #[serde(default)]
    pub output: OutputBlock,
    #[serde(default)]
    pub sampler: SamplerOptions,
}

fn default_runs() -> usize {
    1
}

/// Either a fixed instance or a recipe drawn afresh for every run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSource {
    Explicit(SpectrumModel<f64>),
    Random(RandomModelSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmBlock {
    pub epsilon: f64,
    pub rho: f64,
    /// `ω` used by the parameter formulas; defaults to the model's and must
    /// not be below its residual mass.
    #[serde(default)]
    pub omega: Option<f64>,
    #[serde(default)]
    pub overrides: Overrides,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub axes: Vec<Axis>,
}

/// One sweep axis. Names: `variant`, `epsilon`, `rho`, `omega`, `beta`,
/// `delta`, `S`, `eta_kappa`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: String,
    pub values: Vec<Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    pub dir: PathBuf,
    pub csv: String,
    pub summary: String,
    pub traces: String,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self { dir: "rmpe-out".into(), csv: "runs.csv".into(), summary: "summary.json".into(), traces: "traces".into() }
    }
}

pub const AXES: [&str; 8] = ["variant", "epsilon", "rho", "omega", "beta", "delta", "S", "eta_kappa"];

impl Config {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let cfg: Config = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.runs == 0 {
            return Err(CliError::Config("runs must be at least 1".into()));
        }
        if let ModelSource::Explicit(m) = &self.model {
            m.validate()?;
        }
        if let Some(omega) = self.algorithm.omega {
            let floor = match &self.model {
                ModelSource::Explicit(m) => m.residual_mass(),
                ModelSource::Random(r) => if r.residual_spikes == 0 { 0.0 } else { r.omega },
            };
            if omega + 1e-12 < floor {
                return Err(CliError::Config(format!(
                    "algorithm.omega = {omega} is below the residual mass {floor}; need |c_res|^2 <= omega"
                )));
            }
        }
        if let Some(sweep) = &self.sweep {
            for axis in &sweep.axes {
                if !AXES.contains(&axis.name.as_str()) {
                    return Err(CliError::Config(format!("unknown sweep axis {:?}; expected one of {AXES:?}", axis.name)));
                }
                if axis.values.is_empty() {
                    return Err(CliError::Config(format!("sweep axis {:?} has no values", axis.name)));
                }
            }
        }
        Ok(())
    }

    /// Copy with one axis value applied.
    pub fn with_axis(&self, name: &str, value: &Value) -> CliResult<Config> {
        let mut c = self.clone();
        let num = || value.as_f64().ok_or_else(|| CliError::Config(format!("axis {name} needs numbers, got {value}")));
        match name {
            "variant" => {
                let s = value.as_str().ok_or_else(|| CliError::Config(format!("variant axis needs strings, got {value}")))?;
                c.variant = s.parse()?;
            }
            "epsilon" => c.algorithm.epsilon = num()?,
            "rho" => c.algorithm.rho = num()?,
            "omega" => {
                let w = num()?;
                if let ModelSource::Random(r) = &mut c.model {
                    r.omega = w;
                }
                c.algorithm.omega = Some(w);
            }
            "beta" => random_spec(&mut c, name)?.beta = num()?,
            "delta" => random_spec(&mut c, name)?.delta = num()?,
            "S" => {
                let s = value.as_u64().ok_or_else(|| CliError::Config(format!("axis S needs integers, got {value}")))?;
                random_spec(&mut c, name)?.s = s as usize;
            }
            "eta_kappa" => c.algorithm.overrides.eta_rule = EtaRule::ResidualProportional(num()?),
            _ => return Err(CliError::Config(format!("unknown sweep axis {name:?}"))),
        }
        c.sweep = None;
        Ok(c)
    }
}

fn random_spec<'a>(c: &'a mut Config, axis: &str) -> CliResult<&'a mut RandomModelSpec> {
    match &mut c.model {
        ModelSource::Random(r) => Ok(r),
        ModelSource::Explicit(_) => Err(CliError::Config(format!("axis {axis} needs a random model"))),
    }
}
