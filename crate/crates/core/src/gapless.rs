//! Gap-free spectral estimator: a Gaussian-filtered superlevel set of the
//! trigonometric sum of the moments, then merged into at most `S` windows.

use num_complex::Complex;
use num_traits::Zero;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RmpeError};
use crate::intervals::{Interval, TorusIntervalSet};
use crate::measurement::MomentSignal;
use crate::scalar::Real;

/// Largest evaluation grid for the level set.
pub const MAX_GRID: usize = 1 << 24;

/// Filter and threshold of the level-set estimator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct GaplessParams<T> {
    pub beta: T,
    pub omega: T,
    pub k: usize,
    pub sigma: T,
    pub tau: T,
    pub threshold: T,
    pub phi_s: T,
}

/// `τ = ln(12/(β-ω))/π`.
pub fn tau<T: Real>(beta: T, omega: T) -> T {
    (T::lit(12.0) / (beta - omega)).ln() / T::PI()
}

impl<T: Real> GaplessParams<T> {
    pub fn new(beta: T, omega: T, k: usize) -> Result<Self> {
        if !(omega >= T::zero() && omega < beta && beta <= T::one()) {
            return Err(RmpeError::InvalidArgument(format!("need 0 <= omega < beta <= 1, got {omega}, {beta}")));
        }
        if k == 0 {
            return Err(RmpeError::InvalidArgument("K must be positive".into()));
        }
        let tau = tau(beta, omega);
        let sigma = tau.sqrt();
        let mut p = Self { beta, omega, k, sigma, tau, threshold: T::zero(), phi_s: T::zero() };
        // Sum over all of Z until the Gaussian terms drop below 1e-20.
        let mut phi_s = T::one();
        let mut j = 1usize;
        loop {
            let term = p.weight(j as i64);
            if term < T::lit(1e-20) {
                break;
            }
            phi_s = phi_s + T::lit(2.0) * term;
            j += 1;
        }
        p.phi_s = phi_s;
        p.threshold = (T::lit(6.0) * beta + T::lit(5.0) * omega) / T::lit(11.0) * phi_s;
        Ok(p)
    }

    /// `φ̂_p(k) = exp(-π (kσ/K)²)`.
    pub fn weight(&self, k: i64) -> T {
        let x = T::from_i64(k).expect("k representable") * self.sigma / T::from_usize_lossy(self.k);
        (-T::PI() * x * x).exp()
    }

    /// Resolution scale `τ/K`.
    pub fn resolution(&self) -> T {
        self.tau / T::from_usize_lossy(self.k)
    }

    /// Gap between the threshold and the smallest value the filtered sum
    /// takes on the spikes under the noise hypothesis.
    pub fn detection_margin(&self) -> T {
        (self.beta - self.omega) * self.phi_s / T::lit(33.0)
    }
}

/// Filter-weighted coefficients `c_k = y(k) φ̂_p(k)` for `k = -K..=K`.
fn coefficients<T: Real>(signal: &MomentSignal<T>, params: &GaplessParams<T>) -> Vec<Complex<T>> {
    assert_eq!(signal.k, params.k, "signal and filter disagree on K");
    let k = params.k as i64;
    (-k..=k).map(|j| signal.value(j) * params.weight(j)).collect()
}

/// `|Σ c_k z^k|` on the unit circle by Horner's rule; `coeffs[0]` is `c_{-K}`.
fn horner_abs<T: Real>(coeffs: &[Complex<T>], x: T) -> T {
    let z = Complex::from_polar(T::one(), T::two_pi() * x.frac1());
    coeffs.iter().rev().fold(Complex::zero(), |acc, &c| acc * z + c).norm()
}

/// `|Σ_{|k|<=K} y(k) φ̂_p(k) e^{2πikx}|`.
pub fn filtered_magnitude<T: Real>(signal: &MomentSignal<T>, params: &GaplessParams<T>, x: T) -> T {
    horner_abs(&coefficients(signal, params), x)
}

/// Lipschitz constant of `filtered_magnitude` for this signal.
pub fn lipschitz_bound<T: Real>(signal: &MomentSignal<T>, params: &GaplessParams<T>) -> T {
    let k = params.k as i64;
    let sum = (-k..=k).fold(T::zero(), |acc, j| {
        acc + T::from_i64(j.abs()).expect("k representable") * (signal.value(j) * params.weight(j)).norm()
    });
    T::two_pi() * sum
}

/// Grid size: fine enough that a crossing of height `detection_margin` is
/// always seen by some grid point.
pub fn grid_size<T: Real>(signal: &MomentSignal<T>, params: &GaplessParams<T>) -> usize {
    let lip = lipschitz_bound(signal, params).to_f64_lossy();
    let margin = params.detection_margin().to_f64_lossy();
    let need = (lip / (2.0 * margin)).ceil().max(0.0) as usize;
    need.max(4 * (2 * params.k + 1)).next_power_of_two().min(MAX_GRID)
}

/// `filtered_magnitude` at the `n` points `i/n`, by one inverse FFT.
pub fn filtered_grid<T: Real>(signal: &MomentSignal<T>, params: &GaplessParams<T>, n: usize) -> Vec<T> {
    grid_from_coefficients(&coefficients(signal, params), params.k, n)
}

fn grid_from_coefficients<T: Real>(coeffs: &[Complex<T>], k: usize, n: usize) -> Vec<T> {
    let mut buf = vec![Complex::<T>::zero(); n];
    for (i, &c) in coeffs.iter().enumerate() {
        let j = (i as i64 - k as i64).rem_euclid(n as i64) as usize;
        buf[j] = buf[j] + c;
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    buf.iter().map(|z| z.norm()).collect()
}

/// The superlevel set `X = {x : filtered_magnitude(x) > threshold}`.
///
/// Crossings are located on a uniform grid evaluated by one inverse FFT and
/// then bisected down to `τ/(1000K)`. Each returned endpoint is the outer
/// end of its final bracket, so the result is a superset of the grid-detected
/// level set.
pub fn level_set<T: Real>(signal: &MomentSignal<T>, params: &GaplessParams<T>) -> Result<TorusIntervalSet<T>> {
    let coeffs = coefficients(signal, params);
    let n = grid_size(signal, params);
    let above: Vec<bool> = grid_from_coefficients(&coeffs, params.k, n).into_iter().map(|v| v > params.threshold).collect();
    let Some(start) = above.iter().position(|&a| !a) else {
        return Ok(TorusIntervalSet::full());
    };
    if !above.iter().any(|&a| a) {
        return Err(RmpeError::EmptyLevelSet);
    }
    let h = T::one() / T::from_usize_lossy(n);
    let tol = params.resolution() / T::lit(1000.0);
    let f = |x: T| horner_abs(&coeffs, x) > params.threshold;
    let grid = |i: usize| T::from_usize_lossy(i) * h;
    let mut pieces = Vec::new();
    // Walk the circle once starting from a point below the threshold.
    let mut i = 0;
    while i < n {
        let idx = (start + i) % n;
        let prev = (start + i + n - 1) % n;
        if above[idx] && !above[prev] {
            let mut len = 0;
            while above[(idx + len) % n] {
                len += 1;
            }
            // Lift the run so that the arc is increasing in x.
            let first = grid(start + i);
            let last = grid(start + i + len - 1);
            let lo = refine(&f, first - h, first, tol);
            let hi = refine(&f, last + h, last, tol);
            pieces.push(Interval::new(lo, hi));
            i += len;
        } else {
            i += 1;
        }
    }
    Ok(TorusIntervalSet::from_lifted(pieces))
}

/// Bisects between a point below the threshold and one above it and
/// returns the final below-threshold end.
fn refine<T: Real>(f: &impl Fn(T) -> bool, mut outside: T, mut inside: T, tol: T) -> T {
    while (inside - outside).abs() > tol {
        let mid = (outside + inside) / T::lit(2.0);
        if f(mid) {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    outside
}

/// Spectral windows `Y` for one step together with the `η` they serve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SpectralWindowSet<T> {
    pub windows: TorusIntervalSet<T>,
    pub eta: T,
}

impl<T: Real> SpectralWindowSet<T> {
    /// Checks the three window requirements against known folded spikes:
    /// at most `s` arcs, each meeting a spike, total measure at most `s η`.
    pub fn satisfies_requirements(&self, folded: &[T], s: usize) -> bool {
        let tol = T::lit(T::SNAP.sqrt());
        self.windows.count_components() <= s
            && self.windows.measure() <= T::from_usize_lossy(s) * self.eta + tol
            && self
                .windows
                .arcs()
                .iter()
                .all(|a| folded.iter().any(|&x| a.contains_point(x)))
    }
}

/// Closes `X` and fills every inter-component gap narrower than `τ/K`,
/// wrap-aware.
pub fn build_windows<T: Real>(
    x: &TorusIntervalSet<T>,
    params: &GaplessParams<T>,
    s: usize,
    eta: T,
) -> Result<SpectralWindowSet<T>> {
    let gap_max = params.resolution();
    let arcs = x.arcs();
    let mut lifted: Vec<Interval<T>> = arcs.iter().map(|a| a.lifted()).collect();
    if arcs.len() > 1 {
        for (i, a) in arcs.iter().enumerate() {
            let next = &arcs[(i + 1) % arcs.len()];
            let gap = (next.lo - a.hi()).frac1();
            if gap < gap_max {
                lifted.push(Interval::new(a.hi(), a.hi() + gap));
            }
        }
    }
    let windows = TorusIntervalSet::from_lifted(lifted);
    let found = windows.count_components();
    if found > s {
        return Err(RmpeError::TooManyWindows { found, max: s });
    }
    Ok(SpectralWindowSet { windows, eta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::SpectrumModel;

    fn exact(spikes: &[(f64, f64)], k: usize) -> MomentSignal<f64> {
        let m = SpectrumModel::<f64>::from_spikes(spikes).unwrap();
        MomentSignal::exact(|t| m.exact_moment(t), 1.0, k)
    }

    #[test]
    fn parameter_formulas() {
        let p = GaplessParams::new(0.4, 0.1, 170).unwrap();
        assert!((p.tau - 40f64.ln() / std::f64::consts::PI).abs() < 1e-15);
        assert!((p.sigma * p.sigma - p.tau).abs() < 1e-14);
        let direct: f64 = (-5000i64..=5000).map(|k| p.weight(k)).sum();
        assert!((p.phi_s - direct).abs() < 1e-12);
        assert!((p.threshold - (6.0 * 0.4 + 5.0 * 0.1) / 11.0 * p.phi_s).abs() < 1e-12);
    }

    #[test]
    fn zero_signal() {
        let p = GaplessParams::new(0.5, 0.0, 16).unwrap();
        let y = MomentSignal::from_values(1.0, vec![Complex::zero(); 17], 0.0);
        assert_eq!(filtered_magnitude(&y, &p, 0.3), 0.0);
        assert_eq!(level_set(&y, &p), Err(RmpeError::EmptyLevelSet));
    }

    #[test]
    fn single_spike_peak_is_truncated_filter_mass() {
        let p = GaplessParams::new(0.9, 0.0, 40).unwrap();
        let y = exact(&[(0.5, 1.0)], 40);
        let truncated: f64 = (-40i64..=40).map(|k| p.weight(k)).sum();
        assert!((filtered_magnitude(&y, &p, 0.5) - truncated).abs() < 1e-12);
    }

    #[test]
    fn two_spike_value_matches_direct_sum() {
        let p = GaplessParams::new(0.4, 0.0, 32).unwrap();
        let y = exact(&[(0.2, 0.5), (0.7, 0.5)], 32);
        // Direct real-arithmetic summation of the same series.
        let x = 0.2f64;
        let (mut re, mut im) = (0.0f64, 0.0f64);
        for k in -32i64..=32 {
            let w = p.weight(k);
            for (l, c) in [(0.2f64, 0.5f64), (0.7, 0.5)] {
                let ph = 2.0 * std::f64::consts::PI * (k as f64) * (x - l);
                re += c * w * ph.cos();
                im += c * w * ph.sin();
            }
        }
        assert!((filtered_magnitude(&y, &p, x) - re.hypot(im)).abs() < 1e-12);
    }

    #[test]
    fn single_spike_level_set_is_local() {
        let (beta, eta) = (0.9f64, 1.0 / 24.0);
        let k = (3.0 * tau(beta, 0.0) / eta).ceil() as usize;
        let p = GaplessParams::new(beta, 0.0, k).unwrap();
        let x = level_set(&exact(&[(0.3, 1.0)], k), &p).unwrap();
        assert!(x.contains_point(0.3));
        let r = p.resolution();
        assert!(TorusIntervalSet::from_arcs(&[(0.3 - r, 2.0 * r)]).contains(&x));
    }

    #[test]
    fn sub_resolution_spikes_merge() {
        let k = 64;
        let p = GaplessParams::new(0.45, 0.0, k).unwrap();
        let lam = [0.3, 0.3 + 1.0 / k as f64];
        let x = level_set(&exact(&[(lam[0], 0.5), (lam[1], 0.5)], k), &p).unwrap();
        let y = build_windows(&x, &p, 2, 3.0 * p.resolution() * 1.01).unwrap();
        assert_eq!(y.windows.count_components(), 1);
        assert!(x.contains_point(lam[0]) && x.contains_point(lam[1]));
        let r = p.resolution();
        assert!(TorusIntervalSet::from_arcs(&[(lam[0] - r, lam[1] - lam[0] + 2.0 * r)]).contains(&x));
    }

    #[test]
    fn wrap_around_spike() {
        let k = 60;
        let p = GaplessParams::new(0.9, 0.0, k).unwrap();
        let x = level_set(&exact(&[(0.001, 1.0)], k), &p).unwrap();
        assert_eq!(x.count_components(), 1);
        assert!(x.contains_point(0.001) && x.contains_point(0.0));
    }

    fn params_with_resolution(r: f64) -> GaplessParams<f64> {
        let mut p = GaplessParams::new(0.5, 0.0, 100).unwrap();
        p.tau = r * 100.0;
        p
    }

    #[test]
    fn window_merging_examples() {
        let p = params_with_resolution(0.005);
        let x = TorusIntervalSet::from_arcs(&[(0.10, 0.02), (0.121, 0.019)]);
        let y = build_windows(&x, &p, 2, 0.05).unwrap();
        let arcs = y.windows.arcs();
        assert_eq!(arcs.len(), 1);
        assert!((arcs[0].lo - 0.10).abs() < 1e-15 && (arcs[0].hi() - 0.14).abs() < 1e-15);

        let x = TorusIntervalSet::from_arcs(&[(0.1, 0.02), (0.5, 0.02)]);
        assert_eq!(build_windows(&x, &p, 2, 0.05).unwrap().windows, x);

        let p = params_with_resolution(0.01);
        let x = TorusIntervalSet::from_arcs(&[(0.0, 0.01), (0.995, 0.005 - 1e-9)]);
        let y = build_windows(&x, &p, 1, 0.05).unwrap();
        assert_eq!(y.windows.count_components(), 1);
        assert!(y.windows.contains_point(0.0) && y.windows.contains_point(0.997));
    }

    #[test]
    fn too_many_windows() {
        let p = params_with_resolution(0.001);
        let x = TorusIntervalSet::from_arcs(&[(0.1, 0.01), (0.4, 0.01), (0.7, 0.01)]);
        assert_eq!(build_windows(&x, &p, 2, 0.05), Err(RmpeError::TooManyWindows { found: 3, max: 2 }));
    }

    #[test]
    fn lipschitz_bound_holds_on_random_signal() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let k = 30;
        let p = GaplessParams::new(0.4, 0.1, k).unwrap();
        let values = (0..=k).map(|_| Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let y = MomentSignal::from_values(1.0, values, 0.0);
        let lip = lipschitz_bound(&y, &p);
        let h = 1e-7;
        for _ in 0..2000 {
            let x: f64 = rng.random();
            let d = (filtered_magnitude(&y, &p, x + h) - filtered_magnitude(&y, &p, x)).abs() / h;
            assert!(d <= lip * (1.0 + 1e-6));
        }
    }
}
