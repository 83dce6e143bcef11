//! Randomized brute-force audits of the lemmas and estimator guarantees.
//!
//! Each audit draws `trials` independent instances from its own ChaCha
//! stream and checks the claimed property with an oracle that does not
//! share code with the routine under test where that is practical.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::driver::{compute_params, gapless_k, run_rmpe, verify_estimate_properties, Overrides, Variant};
use crate::error::{Result, RmpeError};
use crate::esprit::{esprit_estimate, matching_distance, GappedParams};
use crate::factors::{
    eta_cap, forbidden_set, padded_set, prime_margin_exhaustive, real_factor_is_feasible, select_real_factor,
    EtaCapKind, PrimePool,
};
use crate::gapless::{build_windows, filtered_grid, filtered_magnitude, level_set, GaplessParams};
use crate::intervals::{IntervalSet, TorusIntervalSet};
use crate::measurement::{
    random_gapped_points, random_model, MomentSignal, RandomModelSpec, ResidualPlacement, SpectrumModel,
};
use crate::scalar::Real;

/// Slack on set inclusions whose endpoints come from bisection.
pub const ENDPOINT_TOL: f64 = 1e-9;

/// Points in the dense verification grid of the level-set audit.
const DENSE_GRID: usize = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuditKind {
    LemmaMReal,
    LemmaPrime,
    Thm1,
    Cor1,
    Thm2,
    Properties,
}

impl AuditKind {
    pub const ALL: [AuditKind; 6] = [
        AuditKind::LemmaMReal,
        AuditKind::LemmaPrime,
        AuditKind::Thm1,
        AuditKind::Cor1,
        AuditKind::Thm2,
        AuditKind::Properties,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AuditKind::LemmaMReal => "lemma-m-real",
            AuditKind::LemmaPrime => "lemma-prime",
            AuditKind::Thm1 => "thm1",
            AuditKind::Cor1 => "cor1",
            AuditKind::Thm2 => "thm2",
            AuditKind::Properties => "properties",
        }
    }
}

impl std::str::FromStr for AuditKind {
    type Err = RmpeError;
    fn from_str(s: &str) -> Result<Self> {
        AuditKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| RmpeError::InvalidArgument(format!("unknown audit {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    pub trials: usize,
    pub seed: u64,
    /// Number of centers (`lemma-m-real`, `lemma-prime`) or eigenvalues;
    /// random per trial when absent.
    pub t: Option<usize>,
    /// Noise level as a multiple of the default `0.99 (β - ω)/3`
    /// (`thm1`, `cor1`). Above `1/0.99` the hypothesis is violated.
    pub alpha_scale: f64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self { trials: 1000, seed: 0, t: None, alpha_scale: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub trial: usize,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub kind: AuditKind,
    pub trials: usize,
    pub passed: usize,
    /// Trials outside the claim's hypothesis (or statistical failures of a
    /// whole run) that are therefore not counterexamples.
    pub skipped: usize,
    pub counterexamples: Vec<Counterexample>,
    /// First skip reason, for the summary line.
    pub note: Option<String>,
}

impl AuditReport {
    pub fn ok(&self) -> bool {
        self.counterexamples.is_empty()
    }
}

enum Outcome {
    Pass,
    Skip(String),
    Fail(String),
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

pub fn run_audit(kind: AuditKind, cfg: &AuditConfig) -> Result<AuditReport> {
    if cfg.trials == 0 {
        return Err(RmpeError::InvalidArgument("trials must be at least 1".into()));
    }
    if let Some(t) = cfg.t {
        let max = if kind == AuditKind::Thm2 { 3 } else { 4 };
        if t == 0 || t > max {
            return Err(RmpeError::InvalidArgument(format!("t must lie in 1..={max}, got {t}")));
        }
    }
    let mut report =
        AuditReport { kind, trials: cfg.trials, passed: 0, skipped: 0, counterexamples: Vec::new(), note: None };
    if matches!(kind, AuditKind::Thm1 | AuditKind::Cor1) && cfg.alpha_scale * 0.99 >= 1.0 {
        report.note = Some(format!(
            "hypothesis violated: alpha = {:.3} (beta - omega)/3; violations are reported, not counted",
            cfg.alpha_scale * 0.99
        ));
    }
    for trial in 0..cfg.trials {
        let mut rng = trial_rng(cfg.seed, trial);
        let outcome = match kind {
            AuditKind::LemmaMReal => lemma_m_real_trial(&mut rng, cfg),
            AuditKind::LemmaPrime => lemma_prime_trial(&mut rng, cfg),
            AuditKind::Thm1 => level_set_trial(&mut rng, cfg, false),
            AuditKind::Cor1 => level_set_trial(&mut rng, cfg, true),
            AuditKind::Thm2 => esprit_trial(&mut rng, cfg),
            AuditKind::Properties => properties_trial(&mut rng, cfg, trial as u64),
        };
        match outcome {
            Outcome::Pass => report.passed += 1,
            Outcome::Skip(why) => {
                report.skipped += 1;
                report.note.get_or_insert(why);
            }
            Outcome::Fail(detail) => report.counterexamples.push(Counterexample { trial, detail }),
        }
    }
    Ok(report)
}

fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

/// Random shares of `total` among `n` parts.
fn split(rng: &mut impl Rng, n: usize, total: f64) -> Vec<f64> {
    let g: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.05).collect();
    let sum: f64 = g.iter().sum();
    g.into_iter().map(|x| total * x / sum).collect()
}

fn lemma_m_real_trial(rng: &mut ChaCha8Rng, cfg: &AuditConfig) -> Outcome {
    let s = cfg.t.unwrap_or_else(|| rng.random_range(1..=4));
    let t = rng.random_range(1..=s);
    let cap = eta_cap(EtaCapKind::Real, s);
    // Half of the trials sit exactly on the hypothesis boundary.
    let zeta = if rng.random_bool(0.5) { cap } else { cap * rng.random_range(0.05..1.0) };
    let zetas = split(rng, t, s as f64 * zeta);
    let m_prev = log_uniform(rng, 1.0, 1e3);
    let halves: Vec<f64> = zetas.iter().map(|z| z / m_prev).collect();
    let mut centers = Vec::new();
    for _ in 0..10_000 {
        let c: Vec<f64> = (0..t).map(|_| rng.random::<f64>() * 0.9).collect();
        let disjoint = (0..t).all(|i| (0..i).all(|j| (c[i] - c[j]).abs() > halves[i] + halves[j]));
        if disjoint {
            centers = c;
            break;
        }
    }
    if centers.is_empty() {
        return Outcome::Skip("could not place disjoint intervals".into());
    }
    let g = padded_set(&centers, &halves);
    if g.count_components() != t {
        return Outcome::Skip("padded intervals touch".into());
    }
    let forbidden = forbidden_set(&g, m_prev).intersection(&IntervalSet::single(2.0, 4.0));
    if forbidden.measure() >= 2.0 {
        return Outcome::Fail(format!(
            "forbidden measure {} >= 2; centers {centers:?}, half-widths {halves:?}, M {m_prev}",
            forbidden.measure()
        ));
    }
    let target = if rng.random_bool(0.5) { None } else { Some(rng.random_range(2.0..4.0)) };
    match select_real_factor(&g, m_prev, target) {
        Ok(m) if (2.0..=4.0).contains(&m) && real_factor_is_feasible(&g, m_prev, m) => Outcome::Pass,
        Ok(m) => Outcome::Fail(format!(
            "m = {m} violates disjointness; centers {centers:?}, half-widths {halves:?}, M {m_prev}"
        )),
        Err(e) => Outcome::Fail(format!("{e}; centers {centers:?}, half-widths {halves:?}, M {m_prev}")),
    }
}

fn lemma_prime_trial(rng: &mut ChaCha8Rng, cfg: &AuditConfig) -> Outcome {
    let t = cfg.t.unwrap_or_else(|| rng.random_range(1..=4));
    let pool = PrimePool::new(t);
    let theta: Vec<f64> = (0..t).map(|_| rng.random::<f64>() * 2.0).collect();
    let best = pool.primes.iter().map(|&p| prime_margin_exhaustive(&theta, p)).fold(0.0, f64::max);
    if best >= pool.bound - 1e-15 {
        Outcome::Pass
    } else {
        Outcome::Fail(format!(
            "theta {theta:?}: best margin {best} below 1/(2 p_a p_b) = {} over primes {:?}",
            pool.bound, pool.primes
        ))
    }
}

/// A random instance for the level-set audits: `(model, M, β, ω)`.
fn random_instance(rng: &mut ChaCha8Rng, s: usize) -> Result<(SpectrumModel<f64>, f64)> {
    let omega = rng.random_range(0.0..0.15);
    let beta_hi = ((1.0 - omega) / s as f64).min(0.9);
    let beta = rng.random_range((omega + 0.02).max(0.1)..beta_hi);
    let spec = RandomModelSpec {
        s,
        beta,
        omega,
        delta: 0.0,
        residual: ResidualPlacement::Uniform,
        residual_spikes: rng.random_range(1..=4),
        domain_hi: 1.0,
    };
    let model = random_model(&spec, rng)?;
    Ok((model, log_uniform(rng, 1.0, 50.0)))
}

/// Adds noise of modulus below `alpha` to each value; half of the trials
/// push every value to the edge of the ball.
fn add_noise(signal: &mut MomentSignal<f64>, alpha: f64, rng: &mut ChaCha8Rng) {
    let at_edge = rng.random_bool(0.5);
    for v in &mut signal.values {
        let r = if at_edge { alpha * (1.0 - 1e-12) } else { alpha * rng.random::<f64>() };
        *v += Complex::from_polar(r, std::f64::consts::TAU * rng.random::<f64>());
    }
    signal.alpha_target = alpha;
}

fn level_set_trial(rng: &mut ChaCha8Rng, cfg: &AuditConfig, windows: bool) -> Outcome {
    let s = cfg.t.unwrap_or_else(|| rng.random_range(1..=3));
    let (model, m) = match random_instance(rng, s) {
        Ok(x) => x,
        Err(e) => return Outcome::Skip(e.to_string()),
    };
    let (beta, omega) = (model.beta, model.omega);
    let tau = crate::gapless::tau(beta, omega);
    let (k, eta) = if windows {
        let eta = rng.random_range(0.01..0.2);
        (gapless_k(tau, eta), eta)
    } else {
        (rng.random_range(16..400), 0.0)
    };
    let alpha = cfg.alpha_scale * 0.99 * (beta - omega) / 3.0;
    let hypothesis = alpha < (beta - omega) / 3.0;
    let params = GaplessParams::new(beta, omega, k).expect("valid filter parameters");
    let mut signal = MomentSignal::exact(|t| model.exact_moment(t), m, k);
    add_noise(&mut signal, alpha, rng);
    let folded: Vec<f64> = model.lambdas().iter().map(|l| (l * m).rem_euclid(1.0)).collect();
    let ctx = || format!("S {s}, beta {beta}, omega {omega}, K {k}, M {m}, alpha {alpha}, folded {folded:?}");
    let verdict = |msg: String| {
        if hypothesis {
            Outcome::Fail(format!("{msg}; {}", ctx()))
        } else {
            Outcome::Skip(format!("hypothesis violated: alpha {alpha} >= (beta - omega)/3 ({msg})"))
        }
    };

    let x = match level_set(&signal, &params) {
        Ok(x) => x,
        Err(e) => return verdict(e.to_string()),
    };
    let res = params.resolution();
    let points = TorusIntervalSet::points(&folded);
    if let Some(l) = folded.iter().find(|&&l| !x.contains_point(l)) {
        return verdict(format!("eigenvalue {l} not in X"));
    }
    if !points.neighborhood(res + ENDPOINT_TOL).contains(&x) {
        return verdict(format!("X = {:?} not within tau/K = {res} of the eigenvalues", x.arcs()));
    }
    if !windows {
        // Dense grid and direct evaluation, independent of the level-set walk.
        let grid = filtered_grid(&signal, &params, DENSE_GRID);
        for (i, v) in grid.iter().enumerate() {
            if *v > params.threshold {
                let xi = i as f64 / DENSE_GRID as f64;
                let d = folded.iter().map(|&l| xi.torus_dist(l)).fold(f64::INFINITY, f64::min);
                if d > res + ENDPOINT_TOL {
                    return verdict(format!("grid point {xi} above threshold at distance {d} > tau/K = {res}"));
                }
            }
        }
        for &l in &folded {
            if filtered_magnitude(&signal, &params, l) <= params.threshold {
                return verdict(format!("filtered magnitude at eigenvalue {l} below threshold"));
            }
        }
        return Outcome::Pass;
    }
    let y = match build_windows(&x, &params, s, eta) {
        Ok(y) => y,
        Err(e) => return verdict(e.to_string()),
    };
    if !y.satisfies_requirements(&folded, s) {
        return verdict(format!("window requirements fail for Y = {:?}", y.windows.arcs()));
    }
    if !folded.iter().all(|&l| y.windows.contains_point(l)) || !points.neighborhood(eta + ENDPOINT_TOL).contains(&y.windows)
    {
        return verdict(format!("Y = {:?} not sandwiched within eta = {eta}", y.windows.arcs()));
    }
    Outcome::Pass
}

fn esprit_trial(rng: &mut ChaCha8Rng, cfg: &AuditConfig) -> Outcome {
    let s = cfg.t.unwrap_or_else(|| rng.random_range(2..=3));
    if s < 2 {
        return Outcome::Skip("ESPRIT audit needs S >= 2".into());
    }
    let dt_hi = if s == 2 { 0.12 } else { 0.08 };
    let delta_tilde = rng.random_range(0.02..dt_hi);
    let lambdas = match random_gapped_points(rng, s, delta_tilde, 1.0) {
        Ok(l) => l,
        Err(e) => return Outcome::Skip(e.to_string()),
    };
    let k = GappedParams::<f64>::default_k(s, delta_tilde);
    let c = GappedParams::<f64>::default_c(k, delta_tilde);
    let beta = rng.random_range(0.1..(0.9 / s as f64));
    let gp = GappedParams { s, k, delta_tilde, c, eta: 0.0, alpha: 0.0 };
    let e9 = gp.noise_limit(beta);
    let omega = e9 * rng.random_range(0.0..0.3);
    let alpha = (e9 - omega) * rng.random_range(0.05..0.99);
    let ctx = format!("lambdas {lambdas:?}, K {k}, C {c}, beta {beta}, omega {omega}, alpha {alpha}");

    // Dominant weights at least beta, residual of mass omega.
    let slack = 1.0 - s as f64 * beta - omega;
    let shares = split(rng, s, slack);
    let dominant: Vec<(f64, f64)> = lambdas.iter().zip(&shares).map(|(&l, &w)| (l, beta + w)).collect();
    let residual: Vec<(f64, f64)> = if omega > 0.0 {
        split(rng, 2, omega).into_iter().map(|w| (rng.random::<f64>(), w)).collect()
    } else {
        Vec::new()
    };
    let spikes = |v: &[(f64, f64)]| v.iter().map(|&(l, w)| crate::measurement::Spike::new(l, w)).collect();
    let model = match SpectrumModel::new(spikes(&dominant), spikes(&residual), beta, omega, delta_tilde) {
        Ok(m) => m,
        Err(e) => return Outcome::Skip(e.to_string()),
    };
    let mut signal = MomentSignal::exact(|t| model.exact_moment(t), 1.0, k);
    add_noise(&mut signal, alpha, rng);
    let bound = gp.md_bound(beta, omega + alpha);
    match esprit_estimate(&signal, s, false).and_then(|e| matching_distance(&e.locations, &lambdas)) {
        Ok(md) if md <= bound => {}
        Ok(md) => return Outcome::Fail(format!("md {md} exceeds bound {bound}; {ctx}")),
        Err(e) => return Outcome::Fail(format!("{e}; {ctx}")),
    }

    // Noiseless, no residual: exact recovery.
    let total: f64 = dominant.iter().map(|d| d.1).sum();
    let clean: Vec<(f64, f64)> = dominant.iter().map(|&(l, w)| (l, w / total)).collect();
    let clean = SpectrumModel::from_spikes(&clean).expect("valid clean model");
    let signal = MomentSignal::exact(|t| clean.exact_moment(t), 1.0, k);
    match esprit_estimate(&signal, s, true).and_then(|e| matching_distance(&e.locations, &lambdas)) {
        Ok(md) if md <= 1e-8 => Outcome::Pass,
        Ok(md) => Outcome::Fail(format!("noiseless md {md} > 1e-8; {ctx}")),
        Err(e) => Outcome::Fail(format!("noiseless: {e}; {ctx}")),
    }
}

fn properties_trial(rng: &mut ChaCha8Rng, cfg: &AuditConfig, seed: u64) -> Outcome {
    let s = cfg.t.unwrap_or_else(|| rng.random_range(1..=3));
    let omega = rng.random_range(0.0..0.1);
    let beta = rng.random_range(0.15..((1.0 - omega) / s as f64).min(0.9));
    let integer = rng.random_bool(0.5);
    let spec = RandomModelSpec {
        s,
        beta,
        omega,
        delta: 0.0,
        residual: ResidualPlacement::Uniform,
        residual_spikes: 2,
        domain_hi: if integer { 1.0 } else { 0.9 },
    };
    let model: SpectrumModel<f64> = match random_model(&spec, rng) {
        Ok(m) => m,
        Err(e) => return Outcome::Skip(e.to_string()),
    };
    let variant = if integer { Variant::GaplessInt } else { Variant::GaplessReal };
    let eps = if rng.random_bool(0.5) { 1e-3 } else { 1e-4 };
    let params = match compute_params(variant, eps, 0.1, s, beta, omega, 0.0, &Overrides::default()) {
        Ok(p) => p,
        Err(e) => return Outcome::Skip(e.to_string()),
    };
    let trace = match run_rmpe(&model, &params, seed) {
        Ok(t) => t,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    if !trace.success {
        return Outcome::Skip(format!(
            "statistical failure: {}",
            trace.failure_reason.map(|r| r.name()).unwrap_or("unknown")
        ));
    }
    let report = verify_estimate_properties(&trace, &model, &params);
    if report.all() {
        Outcome::Pass
    } else {
        Outcome::Fail(format!(
            "{variant} run succeeded but step {:?} violates a property; lambdas {:?}, seed {seed}",
            report.first_violation(),
            model.lambdas()
        ))
    }
}
