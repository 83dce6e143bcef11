//! Ground-truth checks of a finished trace and the runtime metrics.

use serde::{Deserialize, Serialize};

use super::{Estimate, Estimator, RunParams, RunTrace};
use crate::intervals::{Interval, TorusIntervalSet};
use crate::measurement::SpectrumModel;
use crate::scalar::Real;

/// Per-step property flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepProperties {
    pub ell: usize,
    /// The pieces `I_{ℓ,i}` are pairwise disjoint and `Σ|I| <= S η/M_ℓ`.
    pub disjoint_and_small: bool,
    /// Every piece meets `Λ`.
    pub each_meets: bool,
    /// `Λ ⊂ E_ℓ ⊂ B(Λ, η/M_ℓ)`.
    pub sandwich: bool,
    /// `E_ℓ ⊂ B(E_{ℓ-1}, η/(2 M_{ℓ-1}))`.
    pub contraction: bool,
    /// ESPRIT steps only: the amplified gap is at least `Δ̃`.
    pub gap: Option<bool>,
}

impl StepProperties {
    pub fn all(&self) -> bool {
        self.disjoint_and_small && self.each_meets && self.sandwich && self.contraction && self.gap.unwrap_or(true)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    /// `Λ ⊂ E_{-1}`.
    pub initial: bool,
    pub steps: Vec<StepProperties>,
}

impl PropertyReport {
    pub fn all(&self) -> bool {
        self.initial && self.steps.iter().all(StepProperties::all)
    }

    /// First step with any violated property.
    pub fn first_violation(&self) -> Option<usize> {
        self.steps.iter().find(|s| !s.all()).map(|s| s.ell)
    }
}

fn rel_slack<T: Real>(r: T) -> T {
    r * (T::one() + T::lit(1e-9)) + T::lit(1e-12)
}

fn pieces_disjoint<T: Real>(pieces: &[Interval<T>], torus: bool) -> bool {
    for (i, a) in pieces.iter().enumerate() {
        for b in &pieces[i + 1..] {
            let hit = if torus {
                TorusIntervalSet::from_lifted(vec![*a]).intersects(&TorusIntervalSet::from_lifted(vec![*b]))
            } else {
                a.meets(b)
            };
            if hit {
                return false;
            }
        }
    }
    true
}

fn piece_meets<T: Real>(piece: &Interval<T>, lambdas: &[T], torus: bool) -> bool {
    let tol = T::lit(1e-12);
    lambdas.iter().any(|&x| {
        if torus {
            let d = (x - piece.lo).frac1();
            d <= piece.width() + tol || d >= T::one() - tol
        } else {
            piece.lo - tol <= x && x <= piece.hi + tol
        }
    })
}

/// Checks the estimate properties of every completed step against the
/// model's dominant eigenvalues. A trace with no steps only checks `E_{-1}`.
pub fn verify_estimate_properties<T: Real>(
    trace: &RunTrace<T>,
    model: &SpectrumModel<T>,
    params: &RunParams<T>,
) -> PropertyReport {
    let lambdas = model.lambdas();
    let torus = params.variant.is_integer();
    let s = T::from_usize_lossy(params.s);
    let mut prev: &Estimate<T> = &trace.initial;
    let mut m_prev = T::one();
    let mut steps = Vec::new();
    for step in &trace.steps {
        let Some(e) = step.estimate.as_ref() else { break };
        let radius = params.eta / step.m_total;
        let total: T = step.pieces.iter().map(|p| p.width()).fold(T::zero(), |a, b| a + b);
        let contraction =
            step.ell == 0 || e.within_set(prev, rel_slack(params.eta / (T::lit(2.0) * m_prev)));
        let gap = match (step.estimator, step.true_gap) {
            (Estimator::Esprit, Some(g)) => Some(g >= params.delta_tilde * (T::one() - T::lit(1e-9))),
            _ => None,
        };
        steps.push(StepProperties {
            ell: step.ell,
            disjoint_and_small: pieces_disjoint(&step.pieces, torus) && total <= rel_slack(s * radius),
            each_meets: step.pieces.iter().all(|p| piece_meets(p, &lambdas, torus)),
            sandwich: e.contains_all(&lambdas) && e.within(&lambdas, rel_slack(radius)),
            contraction,
            gap,
        });
        prev = e;
        m_prev = step.m_total;
    }
    PropertyReport { initial: trace.initial.contains_all(&lambdas), steps }
}

/// `(T_max, T_total)` from `(M_ℓ, K_ℓ, N_HR,ℓ)` triples:
/// `T_max = max M_ℓ K_ℓ`, `T_total = Σ_ℓ Σ_{k=1}^{K} M_ℓ k N_HR`.
pub fn accounting_from_steps(steps: impl IntoIterator<Item = (f64, usize, u64)>) -> (f64, f64) {
    steps.into_iter().fold((0.0, 0.0), |(tmax, ttot), (m, k, n)| {
        let kf = k as f64;
        (tmax.max(m * kf), ttot + m * kf * (kf + 1.0) / 2.0 * n as f64)
    })
}

pub fn runtime_accounting<T: Real>(trace: &RunTrace<T>) -> (f64, f64) {
    accounting_from_steps(trace.steps.iter().map(|s| (s.m_total.to_f64_lossy(), s.k, s.n_hr)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accounting_examples() {
        assert_eq!(accounting_from_steps([(1.0, 2, 4)]), (2.0, 12.0));
        assert_eq!(accounting_from_steps([(1.0, 2, 2), (2.0, 2, 2)]), (4.0, 18.0));
        assert_eq!(accounting_from_steps([]), (0.0, 0.0));
    }

    #[test]
    fn geometric_growth_ratio() {
        // m = 2: Σ M_ℓ / M_L → 2, so T_total/T_max → 2 · (K(K+1)/2) N / K.
        let (k, n) = (10usize, 6u64);
        let limit = 2.0 * (k * (k + 1) / 2) as f64 * n as f64 / k as f64;
        let mut last = f64::INFINITY;
        for l in [5, 10, 20, 40] {
            let (tmax, ttot) = accounting_from_steps((0..l).map(|i| (2f64.powi(i), k, n)));
            let err = (ttot / tmax - limit).abs();
            assert!(err < last);
            last = err;
        }
        assert!(last / limit < 1e-9);
    }
}
