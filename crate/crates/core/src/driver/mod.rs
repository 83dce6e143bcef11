//! The adaptive multi-step loop: pick `m_ℓ`, sample at powers `M_ℓ k`,
//! estimate windows, unfold against the previous estimate.

mod params;
mod verify;

pub use params::{
    compute_params, gapless_k, steps_term, Estimator, EtaRule, FactorRule, Overrides, PhaseParams, RunParams,
    Variant,
};
pub use verify::{
    accounting_from_steps, runtime_accounting, verify_estimate_properties, PropertyReport, StepProperties,
};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RmpeError};
use crate::esprit::{esprit_estimate, windows_from_esprit};
use crate::factors::{padded_set, select_prime_factor, select_real_factor, PrimePool, M_HI, M_LO};
use crate::gapless::{build_windows, level_set, GaplessParams, SpectralWindowSet};
use crate::intervals::{Interval, IntervalSet, TorusIntervalSet};
use crate::measurement::{min_wrap_gap, phase_term, sample_signal_with, SamplerOptions, Spike, SpectrumModel};
use crate::scalar::Real;

/// Version tag written into every trace.
pub const TRACE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Upper end of the region assumed to hold the spectrum of a real-power run.
pub const REAL_DOMAIN_HI: f64 = 0.9;

/// Hard cap on loop iterations, far above `⌈log2(η/ε)⌉ + 1`.
const STEP_LIMIT: usize = 200;

/// An estimate `E_ℓ`: intervals of the line (real powers) or arcs of the
/// circle (integer powers).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", tag = "kind", content = "set", rename_all = "kebab-case")]
pub enum Estimate<T> {
    Real(IntervalSet<T>),
    Torus(TorusIntervalSet<T>),
}

impl<T: Real> Estimate<T> {
    pub fn initial(integer: bool) -> Self {
        if integer {
            Estimate::Torus(TorusIntervalSet::full())
        } else {
            Estimate::Real(IntervalSet::single(T::zero(), T::lit(REAL_DOMAIN_HI)))
        }
    }

    pub fn measure(&self) -> T {
        match self {
            Estimate::Real(s) => s.measure(),
            Estimate::Torus(s) => s.measure(),
        }
    }

    pub fn count_components(&self) -> usize {
        match self {
            Estimate::Real(s) => s.count_components(),
            Estimate::Torus(s) => s.count_components(),
        }
    }

    /// Components as intervals of the line (arcs lifted).
    pub fn components(&self) -> Vec<Interval<T>> {
        match self {
            Estimate::Real(s) => s.components().to_vec(),
            Estimate::Torus(s) => s.arcs().iter().map(|a| a.lifted()).collect(),
        }
    }

    pub fn contains_point(&self, x: T) -> bool {
        match self {
            Estimate::Real(s) => s.contains_point(x),
            Estimate::Torus(s) => s.contains_point(x),
        }
    }

    pub fn contains_all(&self, points: &[T]) -> bool {
        points.iter().all(|&x| self.contains_point(x))
    }

    /// `self ⊂ B(points, r)`.
    pub fn within(&self, points: &[T], r: T) -> bool {
        match self {
            Estimate::Real(s) => IntervalSet::points(points).neighborhood(r).contains(s),
            Estimate::Torus(s) => TorusIntervalSet::points(points).neighborhood(r).contains(s),
        }
    }

    /// `self ⊂ B(other, r)`; `false` across kinds.
    pub fn within_set(&self, other: &Self, r: T) -> bool {
        match (self, other) {
            (Estimate::Real(a), Estimate::Real(b)) => b.neighborhood(r).contains(a),
            (Estimate::Torus(a), Estimate::Torus(b)) => b.neighborhood(r).contains(a),
            _ => false,
        }
    }

    fn unfold(&self, pieces: &[Interval<T>], m: T) -> Result<(Vec<Interval<T>>, Vec<i64>, Self)> {
        let unfolded = match self {
            Estimate::Real(s) => s.unfold(pieces, m)?,
            Estimate::Torus(s) => s.unfold(pieces, m)?,
        };
        let intervals: Vec<Interval<T>> = unfolded.iter().map(|u| u.interval).collect();
        let shifts = unfolded.iter().map(|u| u.q).collect();
        let next = match self {
            Estimate::Real(_) => Estimate::Real(IntervalSet::from_intervals(intervals.clone())),
            Estimate::Torus(_) => Estimate::Torus(TorusIntervalSet::from_lifted(intervals.clone())),
        };
        Ok((intervals, shifts, next))
    }
}

/// Why a run did not succeed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureReason {
    Ambiguity,
    EmptyLevelSet,
    TooManyWindows,
    RankDeficiency,
    NoFeasibleFactor,
    NoFeasiblePrime,
    /// Final estimate misses a dominant eigenvalue.
    NotContained,
    /// Final estimate reaches farther than `ε` from the eigenvalues.
    TooWide,
    StepLimit,
    Numerical,
}

impl FailureReason {
    pub fn name(self) -> &'static str {
        match self {
            FailureReason::Ambiguity => "ambiguity",
            FailureReason::EmptyLevelSet => "empty-level-set",
            FailureReason::TooManyWindows => "too-many-windows",
            FailureReason::RankDeficiency => "rank-deficiency",
            FailureReason::NoFeasibleFactor => "no-feasible-factor",
            FailureReason::NoFeasiblePrime => "no-feasible-prime",
            FailureReason::NotContained => "not-contained",
            FailureReason::TooWide => "too-wide",
            FailureReason::StepLimit => "step-limit",
            FailureReason::Numerical => "numerical",
        }
    }

    fn from_error(e: &RmpeError) -> Self {
        match e {
            RmpeError::Ambiguity { .. } => FailureReason::Ambiguity,
            RmpeError::EmptyLevelSet => FailureReason::EmptyLevelSet,
            RmpeError::TooManyWindows { .. } => FailureReason::TooManyWindows,
            RmpeError::RankDeficiency { .. } => FailureReason::RankDeficiency,
            RmpeError::NoFeasibleFactor => FailureReason::NoFeasibleFactor,
            RmpeError::NoFeasiblePrime => FailureReason::NoFeasiblePrime,
            _ => FailureReason::Numerical,
        }
    }
}

impl std::fmt::Display for FailureReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Extra spikes added to the sampled moments of one step only. Used to
/// drive a run off its guarantees on purpose.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Perturbation<T> {
    pub step: usize,
    pub spikes: Vec<Spike<T>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", default)]
pub struct RunOptions<T> {
    pub sampler: SamplerOptions,
    pub perturbation: Option<Perturbation<T>>,
}

/// One iteration of the loop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct StepRecord<T> {
    pub ell: usize,
    #[serde(rename = "M")]
    pub m_total: T,
    #[serde(rename = "m")]
    pub factor: T,
    pub estimator: Estimator,
    #[serde(rename = "K")]
    pub k: usize,
    pub n_hr: u64,
    /// Shots spent, `(K + 1) N_HR`.
    pub samples_used: u64,
    /// Summed circuit depth, `M K (K + 1)/2 · N_HR`.
    pub depth_used: f64,
    /// Windows `Y_ℓ` on the circle; absent if the estimator failed.
    pub windows: Option<TorusIntervalSet<T>>,
    /// The translated pieces `I_{ℓ,i}` and their shifts `q_{ℓ,i}`.
    pub pieces: Vec<Interval<T>>,
    pub shifts: Vec<i64>,
    /// `E_ℓ`; absent if the step aborted.
    #[serde(rename = "E")]
    pub estimate: Option<Estimate<T>>,
    /// Ground-truth `min |M_ℓ (λ_i - λ_j) - n|`, for `S >= 2`.
    pub true_gap: Option<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct RunTrace<T> {
    pub version: String,
    pub seed: u64,
    pub model: SpectrumModel<T>,
    pub params: RunParams<T>,
    #[serde(default)]
    pub options: RunOptions<T>,
    pub initial: Estimate<T>,
    pub steps: Vec<StepRecord<T>>,
    #[serde(rename = "T_max")]
    pub t_max: f64,
    #[serde(rename = "T_total")]
    pub t_total: f64,
    pub shots_total: u64,
    pub success: bool,
    pub failure_reason: Option<FailureReason>,
    pub failure_detail: Option<String>,
}

impl<T: Real> RunTrace<T> {
    /// The last completed estimate (`E_{-1}` if no step completed).
    pub fn final_estimate(&self) -> &Estimate<T> {
        self.steps.iter().rev().find_map(|s| s.estimate.as_ref()).unwrap_or(&self.initial)
    }
}

/// Maps a real-power model into `[0, 0.9]` by `λ ↦ 0.9 λ` (after reducing
/// mod 1). The declared gap shrinks by the same factor; an accuracy `ε` in
/// the original units becomes `0.9 ε`.
pub fn prescale_real<T: Real>(model: &SpectrumModel<T>) -> Result<(SpectrumModel<T>, T)> {
    let c = T::lit(REAL_DOMAIN_HI);
    let map = |s: &Spike<T>| Spike::new(s.lambda.frac1() * c, s.weight);
    let scaled = SpectrumModel::new(
        model.dominant.iter().map(map).collect(),
        model.residual.iter().map(map).collect(),
        model.beta,
        model.omega,
        model.delta * c,
    )?;
    Ok((scaled, c))
}

fn check_model<T: Real>(model: &SpectrumModel<T>, params: &RunParams<T>) -> Result<()> {
    model.validate()?;
    if model.s() != params.s {
        return Err(RmpeError::InvalidArgument(format!(
            "model has {} dominant eigenvalues but parameters were computed for S = {}",
            model.s(),
            params.s
        )));
    }
    let tol = T::lit(1e-9);
    if model.beta < params.beta - tol || model.residual_mass() > params.omega + tol {
        return Err(RmpeError::InvalidArgument(
            "model weights inconsistent with the parameters' beta/omega".into(),
        ));
    }
    if params.variant.needs_gap() && model.min_gap() < params.delta {
        return Err(RmpeError::InvalidArgument(format!(
            "model gap {} is below the declared delta {}",
            model.min_gap(),
            params.delta
        )));
    }
    if !params.variant.is_integer() {
        let hi = T::lit(REAL_DOMAIN_HI);
        if model.dominant.iter().any(|s| s.lambda < T::zero() || s.lambda > hi) {
            return Err(RmpeError::InvalidArgument(
                "real-power runs need every dominant eigenvalue in [0, 0.9]; prescale first".into(),
            ));
        }
    }
    Ok(())
}

/// Target factor for [`FactorRule::Geometric`].
fn geometric_target(remaining: f64) -> f64 {
    if remaining <= 1.0 {
        return M_LO;
    }
    let n = remaining.log(M_HI).ceil().max(1.0);
    remaining.powf(1.0 / n).clamp(M_LO, M_HI)
}

fn select_factor<T: Real>(params: &RunParams<T>, e: &Estimate<T>, m_prev: T, pool: &PrimePool) -> Result<T> {
    let eta = params.eta;
    let two = T::lit(2.0);
    match e {
        Estimate::Torus(set) => {
            let mp = m_prev.to_u64().expect("integer amplification fits in u64");
            let p = select_prime_factor(set, mp, eta, pool)?;
            Ok(T::from_u64(p).expect("prime representable"))
        }
        Estimate::Real(set) => {
            let g = match params.variant {
                Variant::GappedReal => {
                    let zeta = ((eta + params.delta_tilde) / two).max(T::lit(0.75) * eta);
                    let centers: Vec<T> = set.components().iter().map(|c| c.center()).collect();
                    let widths = vec![zeta / m_prev; centers.len()];
                    padded_set(&centers, &widths)
                }
                Variant::HybridReal => set.neighborhood(params.delta_tilde.max(eta) / (two * m_prev)),
                _ => set.neighborhood(eta / (two * m_prev)),
            };
            let target = match params.factor_rule {
                FactorRule::Largest => None,
                FactorRule::Geometric => {
                    let remaining = (eta / (params.epsilon * m_prev)).to_f64_lossy();
                    Some(T::lit(geometric_target(remaining)))
                }
            };
            select_real_factor(&g, m_prev, target)
        }
    }
}

fn estimate_windows<T: Real>(
    params: &RunParams<T>,
    phase: &PhaseParams<T>,
    signal: &crate::measurement::MomentSignal<T>,
) -> Result<SpectralWindowSet<T>> {
    match phase.estimator {
        Estimator::Gapless => {
            let gp = GaplessParams::new(params.beta, params.omega, phase.k)?;
            let x = level_set(signal, &gp)?;
            build_windows(&x, &gp, params.s, params.eta)
        }
        Estimator::Esprit => {
            let est = esprit_estimate(signal, params.s, false)?;
            if est.locations.iter().any(|x| !x.is_finite()) {
                return Err(RmpeError::RankDeficiency { expected: params.s });
            }
            Ok(windows_from_esprit(&est, params.eta))
        }
    }
}

/// Runs the multi-step loop on a simulated instance.
///
/// Precondition violations (model inconsistent with `params`) are errors;
/// statistical failures end the run and are recorded in the trace.
pub fn run_rmpe<T: Real>(model: &SpectrumModel<T>, params: &RunParams<T>, seed: u64) -> Result<RunTrace<T>> {
    run_rmpe_with(model, params, seed, &RunOptions::default())
}

pub fn run_rmpe_with<T: Real>(
    model: &SpectrumModel<T>,
    params: &RunParams<T>,
    seed: u64,
    options: &RunOptions<T>,
) -> Result<RunTrace<T>> {
    check_model(model, params)?;
    let lambdas = model.lambdas();
    let integer = params.variant.is_integer();
    let pool = PrimePool::new(params.s);
    let initial = Estimate::initial(integer);

    let mut e = initial.clone();
    let mut m_total = T::one();
    let mut steps: Vec<StepRecord<T>> = Vec::new();
    let mut failure: Option<(FailureReason, String)> = None;

    while params.eta / m_total > params.epsilon {
        let ell = steps.len();
        if ell >= STEP_LIMIT {
            failure = Some((FailureReason::StepLimit, format!("{STEP_LIMIT} steps without reaching eta/M <= epsilon")));
            break;
        }
        let factor = if ell == 0 {
            T::one()
        } else {
            match select_factor(params, &e, m_total, &pool) {
                Ok(m) => m,
                Err(err) => {
                    failure = Some((FailureReason::from_error(&err), err.to_string()));
                    break;
                }
            }
        };
        let m_new = m_total * factor;
        let phase = params.phase_at(m_new);
        let perturb: &[Spike<T>] = match &options.perturbation {
            Some(p) if p.step == ell => &p.spikes,
            _ => &[],
        };
        let moment = |t: T| -> Complex<T> {
            perturb.iter().fold(model.exact_moment(t), |acc, s| acc + phase_term(s.lambda, s.weight, t))
        };
        let kf = phase.k as f64;
        let mut record = StepRecord {
            ell,
            m_total: m_new,
            factor,
            estimator: phase.estimator,
            k: phase.k,
            n_hr: phase.n_hr,
            samples_used: (phase.k as u64 + 1) * phase.n_hr,
            depth_used: m_new.to_f64_lossy() * kf * (kf + 1.0) / 2.0 * phase.n_hr as f64,
            windows: None,
            pieces: Vec::new(),
            shifts: Vec::new(),
            estimate: None,
            true_gap: (params.s >= 2).then(|| min_wrap_gap(&lambdas, m_new)),
        };
        let outcome = sample_signal_with(moment, m_new, phase.k, phase.n_hr, seed, ell as u64, options.sampler)
            .and_then(|signal| estimate_windows(params, &phase, &signal))
            .and_then(|y| {
                record.windows = Some(y.windows.clone());
                let pieces: Vec<Interval<T>> =
                    y.windows.arcs().iter().map(|a| {
                        let l = a.lifted();
                        Interval::new(l.lo / m_new, l.hi / m_new)
                    }).collect();
                e.unfold(&pieces, m_new)
            });
        match outcome {
            Ok((pieces, shifts, next)) => {
                record.pieces = pieces;
                record.shifts = shifts;
                record.estimate = Some(next.clone());
                steps.push(record);
                e = next;
                m_total = m_new;
            }
            Err(err) => {
                steps.push(record);
                failure = Some((FailureReason::from_error(&err), err.to_string()));
                break;
            }
        }
    }

    if failure.is_none() {
        let slack = T::one() + T::lit(1e-9);
        if !e.contains_all(&lambdas) {
            failure = Some((FailureReason::NotContained, "final estimate misses a dominant eigenvalue".into()));
        } else if !e.within(&lambdas, params.epsilon * slack) {
            failure = Some((FailureReason::TooWide, "final estimate is not inside B(Lambda, epsilon)".into()));
        }
    }

    let (t_max, t_total) = accounting_from_steps(steps.iter().map(|s| (s.m_total.to_f64_lossy(), s.k, s.n_hr)));
    let shots_total = steps.iter().map(|s| s.samples_used).sum();
    let (failure_reason, failure_detail) = match failure {
        Some((r, d)) => (Some(r), Some(d)),
        None => (None, None),
    };
    Ok(RunTrace {
        version: TRACE_VERSION.to_string(),
        seed,
        model: model.clone(),
        params: params.clone(),
        options: options.clone(),
        initial,
        steps,
        t_max,
        t_total,
        shots_total,
        success: failure_reason.is_none(),
        failure_reason,
        failure_detail,
    })
}

/// Re-executes a trace from its recorded seed, model, parameters and options.
pub fn replay<T: Real>(trace: &RunTrace<T>) -> Result<RunTrace<T>> {
    run_rmpe_with(&trace.model, &trace.params, trace.seed, &trace.options)
}

/// First step at which the recorded `(m_ℓ, M_ℓ, E_ℓ)` differ from `other`,
/// or the step count if one trace is a prefix of the other.
pub fn first_divergence<T: Real>(a: &RunTrace<T>, b: &RunTrace<T>) -> Option<usize> {
    let n = a.steps.len().min(b.steps.len());
    for i in 0..n {
        let (x, y) = (&a.steps[i], &b.steps[i]);
        if x.factor != y.factor || x.m_total != y.m_total || x.estimate != y.estimate || x.windows != y.windows {
            return Some(i);
        }
    }
    if a.steps.len() != b.steps.len() || a.success != b.success || a.failure_reason != b.failure_reason {
        return Some(n);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gapless_real(lambdas: &[f64], eps: f64) -> (SpectrumModel<f64>, RunParams<f64>) {
        let spikes: Vec<(f64, f64)> = lambdas.iter().map(|&l| (l, 1.0 / lambdas.len() as f64)).collect();
        let model = SpectrumModel::from_spikes(&spikes).unwrap();
        let p = compute_params(Variant::GaplessReal, eps, 0.1, lambdas.len(), model.beta, 0.0, 0.0, &Overrides::default())
            .unwrap();
        (model, p)
    }

    #[test]
    fn single_spike_gapless_real() {
        let (model, p) = gapless_real(&[0.3], 1e-3);
        let mut ok = 0;
        for seed in 0..50 {
            let t = run_rmpe(&model, &p, seed).unwrap();
            if t.success {
                ok += 1;
                let e = t.final_estimate();
                assert_eq!(e.count_components(), 1);
                assert!(e.contains_point(0.3));
                assert!(e.measure() <= 2e-3);
            }
        }
        assert!(ok >= 45, "{ok}/50");
    }

    #[test]
    fn loop_structure() {
        let (model, p) = gapless_real(&[0.3], 1e-3);
        let t = run_rmpe(&model, &p, 7).unwrap();
        assert!(t.success, "{:?}", t.failure_detail);
        assert_eq!(t.steps[0].m_total, 1.0);
        assert_eq!(t.steps[0].factor, 1.0);
        for w in t.steps.windows(2) {
            assert!(w[1].factor >= 2.0 && w[1].factor <= 4.0);
            assert!((w[1].m_total - w[0].m_total * w[1].factor).abs() < 1e-9 * w[1].m_total);
        }
        let last = t.steps.last().unwrap().m_total;
        assert!(p.eta / last <= p.epsilon);
        let prev = t.steps[t.steps.len() - 2].m_total;
        assert!(p.eta / prev > p.epsilon);
        assert!(t.steps.len() as u64 <= p.l_steps);
    }

    #[test]
    fn sub_gap_pair_splits_late() {
        let lambdas = [0.3, 0.3 + 2f64.powi(-20)];
        let model = SpectrumModel::from_spikes(&[(lambdas[0], 0.5), (lambdas[1], 0.5)]).unwrap();
        let p: RunParams<f64> =
            compute_params(Variant::GaplessInt, 2e-7, 0.1, 2, 0.5, 0.0, 0.0, &Overrides::default()).unwrap();
        let t = run_rmpe(&model, &p, 3).unwrap();
        assert!(t.success, "{:?}", t.failure_detail);
        let gap = 2f64.powi(-20);
        let counts: Vec<(f64, usize)> =
            t.steps.iter().map(|s| (p.eta / s.m_total, s.estimate.as_ref().unwrap().count_components())).collect();
        assert_eq!(counts[0].1, 1);
        assert_eq!(counts.last().unwrap().1, 2);
        // One interval while the resolution is coarser than the gap.
        for &(res, c) in &counts {
            if res > 4.0 * gap {
                assert_eq!(c, 1, "{counts:?}");
            }
        }
    }

    #[test]
    fn replay_is_identical() {
        let (model, p) = gapless_real(&[0.2, 0.7], 1e-4);
        let a = run_rmpe(&model, &p, 11).unwrap();
        let b = replay(&a).unwrap();
        assert_eq!(a, b);
        assert_eq!(first_divergence(&a, &b), None);
        let json = serde_json::to_string(&a).unwrap();
        let back: RunTrace<f64> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn zero_iterations_when_eta_below_epsilon() {
        let (model, _) = gapless_real(&[0.3], 1e-3);
        let ov = Overrides { eta: Some(0.01), ..Default::default() };
        let p = compute_params(Variant::GaplessReal, 0.5, 0.1, 1, 1.0, 0.0, 0.0, &ov).unwrap();
        let t = run_rmpe(&model, &p, 0).unwrap();
        assert!(t.steps.is_empty());
        assert_eq!(t.final_estimate(), &Estimate::initial(false));
        assert_eq!((t.t_max, t.t_total), (0.0, 0.0));
    }

    #[test]
    fn model_checks() {
        let model = SpectrumModel::<f64>::from_spikes(&[(0.95, 1.0)]).unwrap();
        let p = compute_params(Variant::GaplessReal, 1e-3, 0.1, 1, 1.0, 0.0, 0.0, &Overrides::default()).unwrap();
        assert!(run_rmpe(&model, &p, 0).is_err());
        let (scaled, c) = prescale_real(&model).unwrap();
        assert!((scaled.dominant[0].lambda - 0.95 * c).abs() < 1e-15);
        assert!(run_rmpe(&scaled, &p, 0).is_ok());
        let p2 = compute_params(Variant::GaplessReal, 1e-3, 0.1, 2, 0.5, 0.0, 0.0, &Overrides::default()).unwrap();
        assert!(run_rmpe(&scaled, &p2, 0).is_err());
    }

    #[test]
    fn successful_traces_satisfy_properties() {
        let (model, p) = gapless_real(&[0.15, 0.6], 1e-4);
        for seed in 0..10 {
            let t = run_rmpe(&model, &p, seed).unwrap();
            if t.success {
                let report = verify_estimate_properties(&t, &model, &p);
                assert!(report.all(), "seed {seed}: {report:?}");
            }
        }
    }

    #[test]
    fn injected_spike_is_flagged() {
        let (model, p) = gapless_real(&[0.3], 1e-4);
        // Step 0 sees the spike moved from 0.3 to 0.6.
        let options = RunOptions {
            perturbation: Some(Perturbation { step: 0, spikes: vec![Spike::new(0.3, -1.0), Spike::new(0.6, 1.0)] }),
            ..Default::default()
        };
        let t = run_rmpe_with(&model, &p, 5, &options).unwrap();
        assert!(!t.success);
        let report = verify_estimate_properties(&t, &model, &p);
        assert_eq!(report.first_violation(), Some(0));
        assert!(!report.steps[0].sandwich);
        assert!(!report.steps[0].each_meets);
        // Same seed without the fault is clean.
        let clean = run_rmpe(&model, &p, 5).unwrap();
        assert!(verify_estimate_properties(&clean, &model, &p).all());
    }

    #[test]
    fn empty_trace_report() {
        let (model, _) = gapless_real(&[0.3], 1e-3);
        let ov = Overrides { eta: Some(0.01), ..Default::default() };
        let p = compute_params(Variant::GaplessReal, 0.5, 0.1, 1, 1.0, 0.0, 0.0, &ov).unwrap();
        let t = run_rmpe(&model, &p, 0).unwrap();
        let report = verify_estimate_properties(&t, &model, &p);
        assert!(report.steps.is_empty() && report.initial && report.all());
    }

    #[test]
    fn geometric_target_rule() {
        assert_eq!(geometric_target(1.5), 2.0);
        assert_eq!(geometric_target(3.0), 3.0);
        assert!((geometric_target(16.0) - 4.0).abs() < 1e-12);
        assert!((geometric_target(20.0) - 20f64.cbrt()).abs() < 1e-12);
    }
}
