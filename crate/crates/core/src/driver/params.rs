//! Parameter calculators for the six algorithm variants.

use serde::{Deserialize, Serialize};

use crate::error::{Result, RmpeError};
use crate::esprit::{bound_factor, noise_limit, GappedParams};
use crate::factors::{eta_cap, EtaCapKind, PrimePool};
use crate::gapless::tau;
use crate::measurement::hoeffding_repetitions;
use crate::scalar::Real;

/// Safety factor applied to strict upper bounds (`α < ...`, `Δ̃ < ...`).
const STRICT: f64 = 0.99;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    GaplessReal,
    GaplessInt,
    GappedReal,
    GappedInt,
    HybridReal,
    HybridInt,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::GaplessReal,
        Variant::GaplessInt,
        Variant::GappedReal,
        Variant::GappedInt,
        Variant::HybridReal,
        Variant::HybridInt,
    ];

    pub fn is_integer(self) -> bool {
        matches!(self, Variant::GaplessInt | Variant::GappedInt | Variant::HybridInt)
    }

    pub fn needs_gap(self) -> bool {
        !matches!(self, Variant::GaplessReal | Variant::GaplessInt)
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::GaplessReal => "gapless-real",
            Variant::GaplessInt => "gapless-int",
            Variant::GappedReal => "gapped-real",
            Variant::GappedInt => "gapped-int",
            Variant::HybridReal => "hybrid-real",
            Variant::HybridInt => "hybrid-int",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Variant {
    type Err = RmpeError;
    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| RmpeError::InvalidArgument(format!("unknown variant {s:?}")))
    }
}

/// How `η` is placed inside the open window `(A ω, upper)` of the gapped
/// and hybrid variants.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "rule", content = "kappa")]
pub enum EtaRule {
    /// `sqrt(lower · upper)`.
    #[default]
    GeometricMidpoint,
    /// `κ A ω`, tracking the residual (`κ > 1`).
    ResidualProportional(f64),
}

/// How the real-power factor is picked among the feasible ones.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FactorRule {
    /// Largest feasible factor.
    Largest,
    /// Feasible factor nearest to `(η/(ε M))^{1/n}`, `n` the number of
    /// factor-4 steps still needed, so the final `M_L` lands just above `η/ε`.
    #[default]
    Geometric,
}

/// Optional user overrides, re-checked against each variant's constraints.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Overrides {
    pub eta: Option<f64>,
    pub k: Option<usize>,
    pub c: Option<f64>,
    pub alpha: Option<f64>,
    pub delta_tilde: Option<f64>,
    pub eta_rule: EtaRule,
    pub factor_rule: FactorRule,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    Gapless,
    Esprit,
}

/// Signal length, noise target and repetitions of one estimator phase.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct PhaseParams<T> {
    pub estimator: Estimator,
    pub k: usize,
    pub alpha: T,
    pub n_hr: u64,
    /// ESPRIT constant `C` (unused by the gapless phase).
    pub c: T,
}

/// Every derived parameter of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct RunParams<T> {
    pub variant: Variant,
    pub epsilon: T,
    pub rho: T,
    pub s: usize,
    pub beta: T,
    pub omega: T,
    pub eta: T,
    pub delta: T,
    pub delta_tilde: T,
    /// Switch point of the hybrid variants: gapless while `M <= M̃`.
    pub m_tilde: T,
    pub tau: T,
    /// Step-count term `⌈log2(η/ε)⌉ + 1` used in `N_HR`.
    pub l_steps: u64,
    pub gapless: Option<PhaseParams<T>>,
    pub esprit: Option<PhaseParams<T>>,
    pub factor_rule: FactorRule,
}

impl<T: Real> RunParams<T> {
    /// Phase in force at amplification `m`.
    pub fn phase_at(&self, m: T) -> PhaseParams<T> {
        match (self.gapless, self.esprit) {
            (Some(g), Some(e)) => {
                if m <= self.m_tilde {
                    g
                } else {
                    e
                }
            }
            (Some(g), None) => g,
            (None, Some(e)) => e,
            (None, None) => unreachable!("a run has at least one phase"),
        }
    }

    pub fn gapped_params(&self) -> Option<GappedParams<T>> {
        self.esprit.map(|e| GappedParams { s: self.s, k: e.k, delta_tilde: self.delta_tilde, c: e.c, eta: self.eta, alpha: e.alpha })
    }
}

fn infeasible<V>(msg: String) -> Result<V> {
    Err(RmpeError::InfeasibleParams(msg))
}

/// `⌈log2(η/ε)⌉ + 1`, at least 1.
pub fn steps_term(eta: f64, epsilon: f64) -> u64 {
    ((eta / epsilon).log2().ceil().max(0.0) as u64) + 1
}

/// Smallest `K >= 3τ/η` with `3τ/K < η` strictly.
pub fn gapless_k(tau: f64, eta: f64) -> usize {
    let mut k = (3.0 * tau / eta).ceil() as usize;
    while 3.0 * tau / k as f64 >= eta {
        k += 1;
    }
    k
}

/// Derives all parameters of a run.
pub fn compute_params<T: Real>(
    variant: Variant,
    epsilon: f64,
    rho: f64,
    s: usize,
    beta: f64,
    omega: f64,
    delta: f64,
    ov: &Overrides,
) -> Result<RunParams<T>> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(RmpeError::InvalidArgument(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(RmpeError::InvalidArgument(format!("rho must lie in (0, 1), got {rho}")));
    }
    if s == 0 {
        return Err(RmpeError::InvalidArgument("S must be at least 1".into()));
    }
    if !(omega >= 0.0 && omega < beta && beta <= 1.0) {
        return Err(RmpeError::InvalidArgument(format!(
            "need |c_res|^2 <= omega < beta <= 1, got omega = {omega}, beta = {beta}"
        )));
    }
    if variant.needs_gap() && !(delta > 0.0) {
        return Err(RmpeError::InvalidArgument(format!("{variant} needs a positive gap delta")));
    }
    let tau_v = tau(beta, omega);
    let gapless_alpha = match ov.alpha {
        Some(a) if variant.needs_gap() => {
            // The override addresses the ESPRIT phase; keep the default here.
            let _ = a;
            STRICT * (beta - omega) / 3.0
        }
        Some(a) => {
            if !(a > 0.0 && a < (beta - omega) / 3.0) {
                return infeasible(format!("alpha = {a} must lie in (0, (beta - omega)/3)"));
            }
            a
        }
        None => STRICT * (beta - omega) / 3.0,
    };
    let gapless_phase = |eta: f64, l_steps: u64, k_override: Option<usize>| -> Result<PhaseParams<T>> {
        let k_min = gapless_k(tau_v, eta);
        let k = match k_override {
            Some(k) if k < k_min => return infeasible(format!("K = {k} must satisfy 3 tau / K < eta, i.e. K >= {k_min}")),
            Some(k) => k,
            None => k_min,
        };
        Ok(PhaseParams {
            estimator: Estimator::Gapless,
            k,
            alpha: T::lit(gapless_alpha),
            n_hr: hoeffding_repetitions(gapless_alpha, rho, k, l_steps),
            c: T::zero(),
        })
    };

    let mut params = RunParams {
        variant,
        epsilon: T::lit(epsilon),
        rho: T::lit(rho),
        s,
        beta: T::lit(beta),
        omega: T::lit(omega),
        eta: T::zero(),
        delta: T::lit(delta),
        delta_tilde: T::zero(),
        m_tilde: T::zero(),
        tau: T::lit(tau_v),
        l_steps: 1,
        gapless: None,
        esprit: None,
        factor_rule: ov.factor_rule,
    };

    match variant {
        Variant::GaplessReal | Variant::GaplessInt => {
            let cap = if variant.is_integer() { eta_cap(EtaCapKind::Integer, s) } else { eta_cap(EtaCapKind::Real, s) };
            let eta = match ov.eta {
                Some(e) if !(e > 0.0 && e <= cap) => return infeasible(format!("eta = {e} must lie in (0, {cap}]")),
                Some(e) => e,
                None => cap,
            };
            let l_steps = steps_term(eta, epsilon);
            params.eta = T::lit(eta);
            params.l_steps = l_steps;
            params.gapless = Some(gapless_phase(eta, l_steps, ov.k)?);
        }
        Variant::GappedReal | Variant::GappedInt | Variant::HybridReal | Variant::HybridInt => {
            let pool = PrimePool::new(s);
            let (upper, delta_tilde, m_tilde) = match variant {
                Variant::GappedReal => {
                    let upper = eta_cap(EtaCapKind::GappedReal, s);
                    let limit = upper.min(delta);
                    let dt = check_delta_tilde(ov.delta_tilde, limit, "min{1/(8S(2S-1)), delta}")?;
                    (upper, dt, 0.0)
                }
                Variant::GappedInt => {
                    let upper = eta_cap(EtaCapKind::GappedInt, s);
                    let limit = (1.0 / (2.0 * pool.pair_product())).min(delta);
                    let dt = check_delta_tilde(ov.delta_tilde, limit, "min{1/(2 p_a p_b), delta}")?;
                    (upper, dt, 0.0)
                }
                Variant::HybridReal => {
                    let upper = eta_cap(EtaCapKind::Real, s);
                    let dt = check_delta_tilde(ov.delta_tilde, upper, "1/(8S(2S-1))")?;
                    (upper, dt, dt / delta)
                }
                Variant::HybridInt => {
                    let upper = eta_cap(EtaCapKind::GappedInt, s).min(1.0 / 6.0);
                    let dt = check_delta_tilde(ov.delta_tilde, eta_cap(EtaCapKind::GappedInt, s), "1/(4S p_a p_b)")?;
                    let m_tilde = dt / delta;
                    if m_tilde < 2.0 {
                        return infeasible(format!(
                            "switch point M~ = delta_tilde/delta = {m_tilde} must be at least 2; the gap is already large, use gapped-int"
                        ));
                    }
                    (upper, dt, m_tilde)
                }
                _ => unreachable!(),
            };
            let k_min = GappedParams::default_k(s, delta_tilde);
            let k = match ov.k {
                Some(k) if k < k_min || k % 2 == 1 => {
                    return infeasible(format!("K = {k} must be even, at least 4S and larger than 4/delta_tilde ({k_min})"))
                }
                Some(k) => k,
                None => k_min,
            };
            let kd = k as f64 * delta_tilde;
            let c = match ov.c {
                Some(c) if !(c > 2.0 && c < kd / 2.0) => return infeasible(format!("C = {c} outside (2, K delta_tilde / 2)")),
                Some(c) => c,
                None => GappedParams::default_c(k, delta_tilde),
            };
            let a = bound_factor(s, beta, c, k);
            let e9 = noise_limit(s, beta, c, k);
            let lower = a * omega;
            if !(lower < upper) {
                return infeasible(format!(
                    "eta window empty: 80S^2/beta ... omega = {lower} is not below the cap {upper} (omega too large relative to beta)"
                ));
            }
            if !(omega < e9) {
                return infeasible(format!("omega = {omega} exceeds the ESPRIT noise limit {e9}"));
            }
            let eta = match (ov.eta, ov.eta_rule) {
                (Some(e), _) => {
                    if !(e > lower && e < upper) {
                        return infeasible(format!("eta = {e} outside the window ({lower}, {upper})"));
                    }
                    e
                }
                (None, _) if omega == 0.0 => upper / 2.0,
                (None, EtaRule::GeometricMidpoint) => (lower * upper).sqrt(),
                (None, EtaRule::ResidualProportional(kappa)) => {
                    let e = kappa * lower;
                    if !(kappa > 1.0 && e < upper) {
                        return infeasible(format!("eta = {kappa} * {lower} outside the window ({lower}, {upper})"));
                    }
                    e
                }
            };
            let alpha_max = e9.min(eta / a) - omega;
            let alpha = match ov.alpha {
                Some(al) if !(al > 0.0 && al < alpha_max) => {
                    return infeasible(format!("alpha = {al} must lie in (0, {alpha_max})"))
                }
                Some(al) => al,
                None => STRICT * alpha_max,
            };
            let l_steps = steps_term(eta, epsilon);
            params.eta = T::lit(eta);
            params.l_steps = l_steps;
            params.delta_tilde = T::lit(delta_tilde);
            params.m_tilde = T::lit(m_tilde);
            params.esprit = Some(PhaseParams {
                estimator: Estimator::Esprit,
                k,
                alpha: T::lit(alpha),
                n_hr: hoeffding_repetitions(alpha, rho, k, l_steps),
                c: T::lit(c),
            });
            if matches!(variant, Variant::HybridReal | Variant::HybridInt) {
                params.gapless = Some(gapless_phase(eta, l_steps, None)?);
            }
        }
    }
    Ok(params)
}

fn check_delta_tilde(ov: Option<f64>, limit: f64, what: &str) -> Result<f64> {
    match ov {
        Some(d) if !(d > 0.0 && d < limit) => infeasible(format!("delta_tilde = {d} must lie in (0, {what} = {limit})")),
        Some(d) => Ok(d),
        None => Ok(STRICT * limit),
    }
}
