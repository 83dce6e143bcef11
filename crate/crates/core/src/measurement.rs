//! Classical simulation of the Hadamard-test measurement channel.
//!
//! A [`SpectrumModel`] is the ground truth: a finite spectral measure on the
//! circle. [`sample_signal`] draws the averaged ±1 outcomes the quantum
//! algorithm would see at evolution times `M k`, `k = 0..=K`.
//!
//! # Randomness
//!
//! Every (step, k, channel) triple owns an independent ChaCha8 stream derived
//! from one master seed: the generator is seeded with the master seed and
//! switched to stream `step * 2^33 + 2 k + channel` (channel 0 is the real
//! part, 1 the imaginary part). Sampling order therefore never affects the
//! result, and parallel and serial evaluation agree bit for bit.

use num_complex::Complex;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Result, RmpeError};
use crate::scalar::Real;

/// One point mass of the spectral measure.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Spike<T> {
    pub lambda: T,
    pub weight: T,
}

impl<T: Real> Spike<T> {
    pub fn new(lambda: T, weight: T) -> Self {
        Self { lambda, weight }
    }
}

/// Ground-truth instance: dominant spikes of weight at least `beta` and a
/// residual of total mass at most `omega`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", deny_unknown_fields)]
pub struct SpectrumModel<T> {
    pub dominant: Vec<Spike<T>>,
    #[serde(default)]
    pub residual: Vec<Spike<T>>,
    pub beta: T,
    pub omega: T,
    /// Declared minimum wrap-around gap of the dominant eigenvalues, 0 if none.
    #[serde(default)]
    pub delta: T,
}

impl<T: Real> SpectrumModel<T> {
    /// Builds a model and checks every invariant.
    pub fn new(dominant: Vec<Spike<T>>, residual: Vec<Spike<T>>, beta: T, omega: T, delta: T) -> Result<Self> {
        let model = Self { dominant, residual, beta, omega, delta };
        model.validate()?;
        Ok(model)
    }

    /// Single-spike or multi-spike model without residual, with `beta` set to
    /// the smallest weight and `omega = 0`.
    pub fn from_spikes(spikes: &[(T, T)]) -> Result<Self> {
        let dominant: Vec<Spike<T>> = spikes.iter().map(|&(l, w)| Spike::new(l, w)).collect();
        let beta = dominant.iter().map(|s| s.weight).fold(T::infinity(), T::min);
        Self::new(dominant, Vec::new(), beta, T::zero(), T::zero())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(RmpeError::InvalidModel(msg));
        if self.dominant.is_empty() {
            return bad("at least one dominant eigenvalue is required".into());
        }
        let tol = T::lit(1e-9).max(T::epsilon() * T::lit(64.0));
        for s in self.dominant.iter().chain(&self.residual) {
            if !(s.lambda >= T::zero() && s.lambda < T::one()) {
                return bad(format!("eigenphase {} outside [0, 1)", s.lambda));
            }
            if !(s.weight >= T::zero()) {
                return bad(format!("negative weight {}", s.weight));
            }
        }
        if !(self.omega >= T::zero() && self.omega < self.beta && self.beta <= T::one()) {
            return bad(format!(
                "need 0 <= |c_res|^2 <= omega < beta <= 1, got omega = {}, beta = {}",
                self.omega, self.beta
            ));
        }
        let total: T = self.dominant.iter().chain(&self.residual).map(|s| s.weight).fold(T::zero(), |a, b| a + b);
        if (total - T::one()).abs() > tol {
            return bad(format!("weights sum to {total}, expected 1"));
        }
        if let Some(min_w) = self.dominant.iter().map(|s| s.weight).reduce(T::min) {
            if min_w < self.beta - tol {
                return bad(format!("dominant weight {min_w} below beta = {}", self.beta));
            }
        }
        let residual = self.residual_mass();
        if residual > self.omega + tol {
            return bad(format!("residual mass {residual} exceeds omega = {}", self.omega));
        }
        if self.delta < T::zero() {
            return bad("delta must be non-negative".into());
        }
        if self.delta > T::zero() && self.dominant.len() > 1 && self.min_gap() < self.delta - tol {
            return bad(format!("dominant eigenvalues are {} apart, declared gap is {}", self.min_gap(), self.delta));
        }
        Ok(())
    }

    /// Number of dominant eigenvalues `S`.
    pub fn s(&self) -> usize {
        self.dominant.len()
    }

    pub fn lambdas(&self) -> Vec<T> {
        self.dominant.iter().map(|s| s.lambda).collect()
    }

    pub fn residual_mass(&self) -> T {
        self.residual.iter().map(|s| s.weight).fold(T::zero(), |a, b| a + b)
    }

    /// Minimum wrap-around distance between distinct dominant eigenvalues;
    /// `1` for a single eigenvalue.
    pub fn min_gap(&self) -> T {
        min_wrap_gap(&self.lambdas(), T::one())
    }

    /// `Σ w e^{-2πiλt}` over every spike, dominant and residual.
    pub fn exact_moment(&self, t: T) -> Complex<T> {
        self.dominant
            .iter()
            .chain(&self.residual)
            .map(|s| phase_term(s.lambda, s.weight, t))
            .fold(Complex::zero(), |a, b| a + b)
    }
}

/// Minimum over pairs of `|scale (a - b) - n|`, minimized over integers `n`.
pub fn min_wrap_gap<T: Real>(points: &[T], scale: T) -> T {
    let mut best = T::one();
    for (i, &a) in points.iter().enumerate() {
        for &b in &points[i + 1..] {
            best = best.min((scale * (a - b)).torus_dist(T::zero()));
        }
    }
    best
}

/// `w e^{-2πiλt}` with the phase reduced mod 1 before scaling by 2π.
#[inline]
pub fn phase_term<T: Real>(lambda: T, weight: T, t: T) -> Complex<T> {
    let phase = (lambda * t).frac1();
    Complex::from_polar(weight, -T::two_pi() * phase)
}

/// The averaged Hadamard-test data `y(k)`, `k = 0..=K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct MomentSignal<T> {
    /// Amplifying factor `M` in effect.
    pub m: T,
    pub k: usize,
    pub values: Vec<Complex<T>>,
    pub alpha_target: T,
    /// Shots per `k`, split evenly between the two channels.
    pub samples_per_k: u64,
}

impl<T: Real> MomentSignal<T> {
    /// Wraps explicit values `y(0..=K)`.
    pub fn from_values(m: T, values: Vec<Complex<T>>, alpha_target: T) -> Self {
        assert!(!values.is_empty(), "a signal needs at least y(0)");
        Self { m, k: values.len() - 1, values, alpha_target, samples_per_k: 0 }
    }

    /// Noise-free moments `f̂(M k)` of an arbitrary moment function.
    pub fn exact(moment: impl Fn(T) -> Complex<T>, m: T, k: usize) -> Self {
        let values = (0..=k).map(|j| moment(m * T::from_usize_lossy(j))).collect();
        Self::from_values(m, values, T::zero())
    }

    /// `y(k)` for `|k| <= K`, with `y(-k) = conj(y(k))`.
    pub fn value(&self, k: i64) -> Complex<T> {
        let idx = k.unsigned_abs() as usize;
        let v = self.values[idx];
        if k < 0 {
            v.conj()
        } else {
            v
        }
    }

    /// Adds independent complex noise of modulus at most `alpha` to each
    /// value (uniform phase, uniform radius in `[0, alpha]`), the bounded
    /// noise model of the estimator guarantees.
    pub fn with_bounded_noise(mut self, alpha: T, rng: &mut impl Rng) -> Self {
        for v in &mut self.values {
            let r: f64 = rng.random::<f64>();
            let theta: f64 = rng.random::<f64>();
            *v = *v + Complex::from_polar(alpha * T::lit(r), T::two_pi() * T::lit(theta));
        }
        self.alpha_target = alpha;
        self
    }
}

/// Sign convention of the imaginary-part Hadamard test.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImSign {
    /// Ancilla outcome 0 has probability `(1 + Im f̂)/2`.
    #[default]
    Standard,
    /// Ancilla outcome 0 has probability `(1 - Im f̂)/2`; the estimate is
    /// negated back when assembling `y`.
    Flipped,
}

/// How the ±1 outcomes of one (k, channel) batch are drawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingMode {
    /// One binomial draw per batch.
    #[default]
    Binomial,
    /// One Bernoulli draw per shot; slow, for cross-validation.
    Bernoulli,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerOptions {
    pub im_sign: ImSign,
    pub mode: SamplingMode,
}

/// Stream index of the (step, k, channel) substream.
pub fn substream_id(step: u64, k: u64, channel: u64) -> u64 {
    debug_assert!(k < 1 << 32 && channel < 2);
    (step << 33) + 2 * k + channel
}

/// RNG owned by one (step, k, channel) triple.
pub fn substream(master_seed: u64, step: u64, k: u64, channel: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(substream_id(step, k, channel));
    rng
}

/// Mean of `n` ±1 outcomes that are +1 with probability `(1 + mean)/2`.
fn pm_one_mean(mean: f64, n: u64, mode: SamplingMode, rng: &mut ChaCha8Rng) -> f64 {
    let p = ((1.0 + mean) / 2.0).clamp(0.0, 1.0);
    let plus = match mode {
        SamplingMode::Binomial => Binomial::new(n, p).expect("valid binomial").sample(rng),
        SamplingMode::Bernoulli => (0..n).filter(|_| rng.random::<f64>() < p).count() as u64,
    };
    (2.0 * plus as f64 - n as f64) / n as f64
}

/// Samples `y(k)`, `k = 0..=K`, at evolution times `M k` from an arbitrary
/// moment function (the model's moments, possibly perturbed).
pub fn sample_signal_with<T: Real>(
    moment: impl Fn(T) -> Complex<T>,
    m: T,
    k: usize,
    n_hr: u64,
    master_seed: u64,
    step: u64,
    options: SamplerOptions,
) -> Result<MomentSignal<T>> {
    if n_hr < 2 || n_hr % 2 == 1 {
        return Err(RmpeError::InvalidArgument(format!("N_HR must be even and at least 2, got {n_hr}")));
    }
    let half = n_hr / 2;
    let sign = match options.im_sign {
        ImSign::Standard => 1.0,
        ImSign::Flipped => -1.0,
    };
    let values = (0..=k)
        .map(|j| {
            let f = moment(m * T::from_usize_lossy(j));
            let mut re_rng = substream(master_seed, step, j as u64, 0);
            let mut im_rng = substream(master_seed, step, j as u64, 1);
            let re = pm_one_mean(f.re.to_f64_lossy(), half, options.mode, &mut re_rng);
            let im = sign * pm_one_mean(sign * f.im.to_f64_lossy(), half, options.mode, &mut im_rng);
            Complex::new(T::lit(re), T::lit(im))
        })
        .collect();
    Ok(MomentSignal { m, k, values, alpha_target: T::zero(), samples_per_k: n_hr })
}

/// Samples `y(k)` for the model's own moments.
pub fn sample_signal<T: Real>(
    model: &SpectrumModel<T>,
    m: T,
    k: usize,
    n_hr: u64,
    master_seed: u64,
    step: u64,
    options: SamplerOptions,
) -> Result<MomentSignal<T>> {
    sample_signal_with(|t| model.exact_moment(t), m, k, n_hr, master_seed, step, options)
}

/// Repetitions per `k` so that every `|y(k) - f̂(Mk)| < alpha` over all `L`
/// steps with probability at least `1 - rho`:
/// `2 ⌈(4/α²)(ln(4/ρ) + ln L + ln(K+1))⌉`.
pub fn hoeffding_repetitions(alpha: f64, rho: f64, k: usize, l_steps: u64) -> u64 {
    assert!(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
    assert!(rho > 0.0 && rho < 1.0, "rho must lie in (0, 1)");
    assert!(l_steps >= 1, "at least one step");
    let logs = (4.0 / rho).ln() + (l_steps as f64).ln() + ((k + 1) as f64).ln();
    2 * (4.0 / (alpha * alpha) * logs).ceil() as u64
}

/// Where the residual mass is placed by [`random_model`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResidualPlacement {
    /// Uniformly on the circle.
    #[default]
    Uniform,
    /// Within `3δ` of a dominant eigenvalue (`0.01` if `δ = 0`).
    Near,
    /// No residual spikes; `ω` only enters through the parameters.
    None,
}

/// Recipe for a random instance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomModelSpec {
    pub s: usize,
    pub beta: f64,
    pub omega: f64,
    #[serde(default)]
    pub delta: f64,
    #[serde(default)]
    pub residual: ResidualPlacement,
    #[serde(default = "default_residual_spikes")]
    pub residual_spikes: usize,
    /// Dominant eigenvalues are drawn from `[0, domain_hi)`.
    #[serde(default = "default_domain_hi")]
    pub domain_hi: f64,
}

fn default_residual_spikes() -> usize {
    3
}

fn default_domain_hi() -> f64 {
    1.0
}

/// Rejection-sampling budget for gap-respecting eigenvalues.
pub const MAX_GAP_ATTEMPTS: usize = 100_000;

/// `s` points of `[0, hi)` pairwise at least `gap` apart mod 1.
pub fn random_gapped_points(rng: &mut impl Rng, s: usize, gap: f64, hi: f64) -> Result<Vec<f64>> {
    for _ in 0..MAX_GAP_ATTEMPTS {
        let mut pts: Vec<f64> = (0..s).map(|_| rng.random::<f64>() * hi).collect();
        if min_wrap_gap(&pts, 1.0) >= gap || s == 1 {
            pts.sort_by(|a, b| a.total_cmp(b));
            return Ok(pts);
        }
    }
    Err(RmpeError::InvalidModel(format!(
        "no {s} points of [0, {hi}) with gap {gap} after {MAX_GAP_ATTEMPTS} attempts"
    )))
}

/// Draws a model: dominant eigenvalues by rejection sampling against the
/// gap, dominant weights `β + (1 - ω_res - Sβ) g_i/Σg` with `g_i ~ Exp(1)`,
/// and residual spikes sharing `ω` the same way.
pub fn random_model<T: Real>(spec: &RandomModelSpec, rng: &mut impl Rng) -> Result<SpectrumModel<T>> {
    let s = spec.s;
    if s == 0 {
        return Err(RmpeError::InvalidModel("S must be at least 1".into()));
    }
    let residual_mass = match spec.residual {
        ResidualPlacement::None => 0.0,
        _ if spec.residual_spikes == 0 => 0.0,
        _ => spec.omega,
    };
    let slack = 1.0 - residual_mass - s as f64 * spec.beta;
    if slack < -1e-12 {
        return Err(RmpeError::InvalidModel(format!(
            "S beta + omega = {} exceeds 1",
            s as f64 * spec.beta + residual_mass
        )));
    }
    let lambdas = random_gapped_points(rng, s, spec.delta, spec.domain_hi)?;
    let shares = |rng: &mut dyn rand::RngCore, n: usize| -> Vec<f64> {
        let g: Vec<f64> = (0..n).map(|_| rand_distr::Exp1.sample(rng)).collect();
        let total: f64 = g.iter().sum();
        g.into_iter().map(|x| x / total).collect()
    };
    let dom_w = shares(rng, s);
    let dominant: Vec<Spike<T>> = lambdas
        .iter()
        .zip(&dom_w)
        .map(|(&l, &g)| Spike::new(T::lit(l), T::lit(spec.beta + slack.max(0.0) * g)))
        .collect();
    let mut residual = Vec::new();
    if residual_mass > 0.0 {
        let res_w = shares(rng, spec.residual_spikes);
        for w in res_w {
            let lambda = match spec.residual {
                ResidualPlacement::Near => {
                    let radius = if spec.delta > 0.0 { 3.0 * spec.delta } else { 0.01 };
                    let anchor = lambdas[rng.random_range(0..s)];
                    (anchor + (2.0 * rng.random::<f64>() - 1.0) * radius).rem_euclid(1.0)
                }
                _ => rng.random::<f64>(),
            };
            residual.push(Spike::new(T::lit(lambda).frac1(), T::lit(residual_mass * w)));
        }
    }
    // Renormalize in T so the weights sum to one up to rounding.
    let total = dominant.iter().chain(&residual).map(|x| x.weight).fold(T::zero(), |a, b| a + b);
    let dominant = dominant.into_iter().map(|x| Spike::new(x.lambda, x.weight / total)).collect();
    let residual = residual.into_iter().map(|x| Spike::new(x.lambda, x.weight / total)).collect();
    SpectrumModel::new(dominant, residual, T::lit(spec.beta), T::lit(spec.omega), T::lit(spec.delta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn close(a: Complex<f64>, b: Complex<f64>, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn exact_moment_examples() {
        let m = SpectrumModel::<f64>::from_spikes(&[(0.25, 1.0)]).unwrap();
        assert!(close(m.exact_moment(1.0), Complex::new(0.0, -1.0), 1e-15));
        let m = SpectrumModel::<f64>::from_spikes(&[(0.0, 0.5), (0.5, 0.5)]).unwrap();
        assert!(close(m.exact_moment(1.0), Complex::zero(), 1e-15));
        let m = SpectrumModel::<f64>::from_spikes(&[(0.3, 0.7), (0.8, 0.3)]).unwrap();
        // 0.7 e^{-2πi·0.75} + 0.3 e^{-2πi·2} = 0.7i + 0.3
        assert!(close(m.exact_moment(2.5), Complex::new(0.3, 0.7), 1e-14));
        assert!(close(m.exact_moment(0.0), Complex::new(1.0, 0.0), 1e-15));
    }

    #[test]
    fn exact_moment_reduces_large_phases() {
        let m = SpectrumModel::<f64>::from_spikes(&[(0.125, 1.0)]).unwrap();
        let t = 8.0e9 + 2.0;
        let want = Complex::from_polar(1.0, -2.0 * PI * 0.25);
        assert!(close(m.exact_moment(t), want, 1e-6));
    }

    #[test]
    fn model_validation() {
        assert!(SpectrumModel::new(vec![Spike::new(0.1, 0.6)], vec![Spike::new(0.5, 0.4)], 0.5, 0.4, 0.0).is_ok());
        // omega >= beta
        let err = SpectrumModel::new(vec![Spike::new(0.1, 0.6)], vec![Spike::new(0.5, 0.4)], 0.4, 0.4, 0.0);
        assert!(matches!(err, Err(RmpeError::InvalidModel(msg)) if msg.contains("omega < beta")));
        // not normalized
        assert!(SpectrumModel::new(vec![Spike::new(0.1, 0.5)], vec![], 0.5, 0.0, 0.0).is_err());
        // gap violated
        let spikes = vec![Spike::new(0.1, 0.5), Spike::new(0.12, 0.5)];
        assert!(SpectrumModel::new(spikes.clone(), vec![], 0.5, 0.0, 0.05).is_err());
        assert!(SpectrumModel::new(spikes, vec![], 0.5, 0.0, 0.02 - 1e-12).is_ok());
        // wrap-around gap
        let spikes = vec![Spike::new(0.99, 0.5), Spike::new(0.01, 0.5)];
        assert!(SpectrumModel::new(spikes, vec![], 0.5, 0.0, 0.03).is_err());
    }

    #[test]
    fn model_json_field_names() {
        let json = r#"{"dominant":[{"lambda":0.3,"weight":0.9}],"residual":[{"lambda":0.6,"weight":0.1}],"beta":0.5,"omega":0.1,"delta":0.0}"#;
        let m: SpectrumModel<f64> = serde_json::from_str(json).unwrap();
        m.validate().unwrap();
        assert_eq!(m.s(), 1);
        let back: SpectrumModel<f64> = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn deterministic_outcomes() {
        let m = SpectrumModel::<f64>::from_spikes(&[(0.0, 1.0)]).unwrap();
        // The real channel is deterministic; the imaginary one is a fair coin.
        let y = sample_signal(&m, 3.7, 1, 20_000, 1, 0, SamplerOptions::default()).unwrap();
        for v in &y.values {
            assert_eq!(v.re, 1.0);
            assert!(v.im.abs() < 0.05);
        }

        let m = SpectrumModel::<f64>::from_spikes(&[(0.25, 1.0)]).unwrap();
        let y = sample_signal(&m, 1.0, 1, 2000, 9, 0, SamplerOptions::default()).unwrap();
        assert_eq!(y.values[1].im, -1.0);
        assert!(y.values[1].re.abs() < 0.1);
    }

    #[test]
    fn im_sign_round_trip() {
        let m = SpectrumModel::<f64>::from_spikes(&[(0.25, 1.0)]).unwrap();
        for mode in [SamplingMode::Binomial, SamplingMode::Bernoulli] {
            let flipped = SamplerOptions { im_sign: ImSign::Flipped, mode };
            let y = sample_signal(&m, 1.0, 1, 200, 4, 0, flipped).unwrap();
            assert_eq!(y.values[1].im, -1.0);
        }
        let m = SpectrumModel::<f64>::from_spikes(&[(0.1, 0.5), (0.35, 0.3), (0.8, 0.2)]).unwrap();
        let flipped = SamplerOptions { im_sign: ImSign::Flipped, ..Default::default() };
        let y = sample_signal(&m, 1.0, 4, 400_000, 4, 0, flipped).unwrap();
        for k in 0..=4 {
            assert!(close(y.values[k], m.exact_moment(k as f64), 1e-2));
        }
    }

    #[test]
    fn rejects_odd_repetitions() {
        let m = SpectrumModel::<f64>::from_spikes(&[(0.0, 1.0)]).unwrap();
        assert!(sample_signal(&m, 1.0, 1, 3, 0, 0, SamplerOptions::default()).is_err());
        assert!(sample_signal(&m, 1.0, 1, 0, 0, 0, SamplerOptions::default()).is_err());
    }

    #[test]
    fn sampling_is_deterministic_and_stream_separated() {
        let m = SpectrumModel::<f64>::from_spikes(&[(0.1, 0.5), (0.35, 0.3), (0.8, 0.2)]).unwrap();
        let a = sample_signal(&m, 2.0, 6, 100, 42, 3, SamplerOptions::default()).unwrap();
        let b = sample_signal(&m, 2.0, 6, 100, 42, 3, SamplerOptions::default()).unwrap();
        assert_eq!(a, b);
        let c = sample_signal(&m, 2.0, 6, 100, 42, 4, SamplerOptions::default()).unwrap();
        assert_ne!(a.values, c.values);
        // A shorter signal is a prefix of a longer one.
        let d = sample_signal(&m, 2.0, 3, 100, 42, 3, SamplerOptions::default()).unwrap();
        assert_eq!(&a.values[..4], &d.values[..]);
    }

    #[test]
    fn monte_carlo_mean_matches_exact_moment() {
        let m = SpectrumModel::<f64>::from_spikes(&[(0.1, 0.5), (0.35, 0.3), (0.8, 0.2)]).unwrap();
        let y = sample_signal(&m, 1.5, 5, 1_000_000, 7, 0, SamplerOptions::default()).unwrap();
        for k in 0..=5 {
            assert!(close(y.values[k], m.exact_moment(1.5 * k as f64), 5e-3));
        }
    }

    #[test]
    fn bernoulli_and_binomial_agree_in_distribution() {
        let m = SpectrumModel::<f64>::from_spikes(&[(0.1, 0.5), (0.35, 0.5)]).unwrap();
        let naive = SamplerOptions { mode: SamplingMode::Bernoulli, ..Default::default() };
        let a = sample_signal(&m, 1.0, 3, 200_000, 1, 0, naive).unwrap();
        let b = sample_signal(&m, 1.0, 3, 200_000, 1, 0, SamplerOptions::default()).unwrap();
        for k in 0..=3 {
            assert!(close(a.values[k], b.values[k], 2e-2));
        }
    }

    #[test]
    fn conjugate_extension() {
        let y = MomentSignal::<f64>::from_values(1.0, vec![Complex::new(1.0, 0.0), Complex::new(0.2, 0.3)], 0.0);
        assert_eq!(y.value(-1), Complex::new(0.2, -0.3));
        assert_eq!(y.value(1), Complex::new(0.2, 0.3));
    }

    #[test]
    fn hoeffding_examples() {
        assert_eq!(hoeffding_repetitions(0.1, 0.1, 9, 8), 6458);
        assert!(hoeffding_repetitions(0.2, 0.1, 9, 8) < hoeffding_repetitions(0.1, 0.1, 9, 8));
        let base = hoeffding_repetitions(0.1, 0.1, 9, 8);
        let doubled = hoeffding_repetitions(0.1, 0.1, 19, 8);
        assert!(doubled - base <= 2 * (400.0 * 2f64.ln()).ceil() as u64);
    }

    #[test]
    fn random_models_respect_constraints() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for placement in [ResidualPlacement::Uniform, ResidualPlacement::Near, ResidualPlacement::None] {
            for s in 1..=4 {
                let spec = RandomModelSpec {
                    s,
                    beta: 0.2,
                    omega: 0.05,
                    delta: 0.05,
                    residual: placement,
                    residual_spikes: 3,
                    domain_hi: 0.9,
                };
                let m: SpectrumModel<f64> = random_model(&spec, &mut rng).unwrap();
                assert_eq!(m.s(), s);
                assert!(m.dominant.iter().all(|x| x.lambda < 0.9 && x.weight >= 0.2 - 1e-12));
                assert!(m.min_gap() >= 0.05);
                let expected = if placement == ResidualPlacement::None { 0.0 } else { 0.05 };
                assert!((m.residual_mass() - expected).abs() < 1e-12);
            }
        }
        let bad = RandomModelSpec { s: 4, beta: 0.3, omega: 0.1, delta: 0.0, residual: ResidualPlacement::Uniform, residual_spikes: 1, domain_hi: 1.0 };
        assert!(random_model::<f64>(&bad, &mut rng).is_err());
        let crowded = RandomModelSpec { s: 3, beta: 0.2, omega: 0.0, delta: 0.4, residual: ResidualPlacement::None, residual_spikes: 0, domain_hi: 1.0 };
        assert!(random_model::<f64>(&crowded, &mut rng).is_err());
    }
}
