//! ESPRIT line-spectrum estimator for the gapped regime, plus the constants
//! of its matching-distance error bound.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RmpeError};
use crate::gapless::SpectralWindowSet;
use crate::intervals::TorusIntervalSet;
use crate::linalg::{eigenvalues, hankel_leading_subspace, pinv_solve};
use crate::measurement::MomentSignal;
use crate::scalar::Real;

/// Estimated spike locations `Λ̃` (sorted, in `[0, 1)`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct EspritEstimate<T> {
    pub locations: Vec<T>,
    pub singular_values: Vec<T>,
}

/// Runs ESPRIT on `y(0..=K)` with model order `s`.
///
/// With `strict_rank`, a Hankel matrix whose `s`-th singular value is below
/// `1e-12` of the leading one is rejected as rank deficient.
pub fn esprit_estimate<T: Real>(signal: &MomentSignal<T>, s: usize, strict_rank: bool) -> Result<EspritEstimate<T>> {
    let k = signal.k;
    if s == 0 || k % 2 == 1 || k < 4 * s {
        return Err(RmpeError::InvalidArgument(format!("ESPRIT needs even K >= 4S, got K = {k}, S = {s}")));
    }
    let (u, singular_values) = hankel_leading_subspace(&signal.values, s);
    let lead = singular_values[0];
    if strict_rank && !(singular_values[s - 1] >= T::lit(1e-12) * lead && lead > T::zero()) {
        return Err(RmpeError::RankDeficiency { expected: s });
    }
    let half = k / 2;
    let u0 = u.row_block(0, half);
    let u1 = u.row_block(1, half);
    let psi = pinv_solve(&u0, &u1);
    let mut locations: Vec<T> = eigenvalues(&psi)
        .into_iter()
        .map(|mu: Complex<T>| (-mu.arg() / T::two_pi()).frac1())
        .collect();
    locations.sort_by(|a, b| a.partial_cmp(b).expect("finite locations"));
    Ok(EspritEstimate { locations, singular_values })
}

/// Bottleneck matching distance on the circle: the minimum over pairings of
/// the largest torus distance between paired points.
pub fn matching_distance<T: Real>(a: &[T], b: &[T]) -> Result<T> {
    if a.len() != b.len() {
        return Err(RmpeError::InvalidArgument(format!("cannot match {} points with {}", a.len(), b.len())));
    }
    if a.len() > 10 {
        return Err(RmpeError::InvalidArgument("brute-force matching supports at most 10 points".into()));
    }
    let cost: Vec<Vec<T>> = a.iter().map(|&x| b.iter().map(|&y| x.torus_dist(y)).collect()).collect();
    let mut used = vec![false; b.len()];
    let mut best = T::infinity();
    assign(&cost, 0, T::zero(), &mut used, &mut best);
    Ok(if a.is_empty() { T::zero() } else { best })
}

fn assign<T: Real>(cost: &[Vec<T>], row: usize, worst: T, used: &mut [bool], best: &mut T) {
    if worst >= *best {
        return;
    }
    if row == cost.len() {
        *best = worst;
        return;
    }
    for col in 0..used.len() {
        if !used[col] {
            used[col] = true;
            assign(cost, row + 1, worst.max(cost[row][col]), used, best);
            used[col] = false;
        }
    }
}

/// `Y = B_T(Λ̃, η/2)`.
pub fn windows_from_esprit<T: Real>(est: &EspritEstimate<T>, eta: T) -> SpectralWindowSet<T> {
    let half = eta / T::lit(2.0);
    let arcs: Vec<(T, T)> = est.locations.iter().map(|&x| (x - half, eta)).collect();
    SpectralWindowSet { windows: TorusIntervalSet::from_arcs(&arcs), eta }
}

/// Parameters of one ESPRIT phase.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct GappedParams<T> {
    pub s: usize,
    pub k: usize,
    pub delta_tilde: T,
    pub c: T,
    pub eta: T,
    pub alpha: T,
}

impl<T: Real> GappedParams<T> {
    /// Default `C = min(4, sqrt(K Δ̃))` clamped into `(2, K Δ̃/2)`.
    pub fn default_c(k: usize, delta_tilde: T) -> T {
        let kd = T::from_usize_lossy(k) * delta_tilde;
        let eps = T::lit(1e-6);
        T::lit(4.0).min(kd.sqrt()).max(T::lit(2.0) + eps).min(kd / T::lit(2.0) - eps)
    }

    /// Smallest even `K > 4/Δ̃` with `K >= 4S`.
    pub fn default_k(s: usize, delta_tilde: T) -> usize {
        let need = (T::lit(4.0) / delta_tilde).floor().to_usize().expect("K fits in usize") + 1;
        let k = need.max(4 * s);
        k + k % 2
    }

    /// Checks the structural hypotheses on `K` and `C`.
    pub fn check(&self) -> Result<()> {
        let kd = T::from_usize_lossy(self.k) * self.delta_tilde;
        if self.k % 2 == 1 || self.k < 4 * self.s || kd < T::lit(4.0) {
            return Err(RmpeError::InfeasibleParams(format!(
                "K = {} must be even, at least 4S and at least 4/delta_tilde",
                self.k
            )));
        }
        if !(self.c > T::lit(2.0) && self.c < kd / T::lit(2.0)) {
            return Err(RmpeError::InfeasibleParams(format!("C = {} outside (2, K delta_tilde / 2)", self.c)));
        }
        Ok(())
    }

    /// The factor `A` with `md(Λ̃, Λ) <= (A/2)(ω+α)` and window lower bound `A(ω+α) < η`.
    pub fn bound_factor(&self, beta: T) -> T {
        bound_factor(self.s, beta, self.c, self.k)
    }

    /// Matching-distance bound for a residual plus noise level `omega + alpha`.
    pub fn md_bound(&self, beta: T, noise: T) -> T {
        self.bound_factor(beta) / T::lit(2.0) * noise
    }

    /// Largest admissible `ω + α` for the bound to apply.
    pub fn noise_limit(&self, beta: T) -> T {
        noise_limit(self.s, beta, self.c, self.k)
    }
}

/// `(80S²/β) sqrt(C³(2+K)/((C-1)³K)) (1 - 2CS/((C-1)K))^{-1}`.
pub fn bound_factor<T: Real>(s: usize, beta: T, c: T, k: usize) -> T {
    let (s, k) = (T::from_usize_lossy(s), T::from_usize_lossy(k));
    let one = T::one();
    let two = T::lit(2.0);
    T::lit(80.0) * s * s / beta * (c.powi(3) * (two + k) / ((c - one).powi(3) * k)).sqrt()
        / (one - two * c * s / ((c - one) * k))
}

/// `Cβ/(8(C-1)sqrt(2S)) sqrt(1 - 2(C-1)S/(CK))`.
pub fn noise_limit<T: Real>(s: usize, beta: T, c: T, k: usize) -> T {
    let (s, k) = (T::from_usize_lossy(s), T::from_usize_lossy(k));
    let one = T::one();
    let two = T::lit(2.0);
    c * beta / (T::lit(8.0) * (c - one) * (two * s).sqrt()) * (one - two * (c - one) * s / (c * k)).sqrt()
}
