//! Choice of the amplifying factor `m_ℓ`.
//!
//! Real-power model: a factor `m ∈ [2, 4]` outside the forbidden set, so that
//! shifting the padded estimate by any nonzero multiple of `1/(M m)` moves it
//! off itself. Integer-power model: a prime from a small pool with the same
//! property modulo 1.

use serde::{Deserialize, Serialize};

use crate::error::{Result, RmpeError};
use crate::intervals::{Interval, IntervalSet, TorusIntervalSet};
use crate::scalar::Real;

/// Candidate range of the real-power factor.
pub const M_LO: f64 = 2.0;
pub const M_HI: f64 = 4.0;
/// Preferred clearance between the chosen factor and the forbidden set.
pub const FACTOR_MARGIN: f64 = 1e-4;

/// `∪ R_ij ∩ [2, 4]` for the padded set `G`: the factors `m` for which some
/// translate `G + q/(M m)`, `q ≠ 0`, meets `G`.
pub fn forbidden_set<T: Real>(g: &IntervalSet<T>, m_prev: T) -> IntervalSet<T> {
    let (lo, hi) = (T::lit(M_LO), T::lit(M_HI));
    let comps = g.components();
    // Rounding in `M · width / 2` must not hide a touching translate.
    let inflate = T::one() + T::lit(1e-9);
    let half = |w: T| m_prev * w / T::lit(2.0) * inflate;
    let mut out = Vec::new();
    for (i, a) in comps.iter().enumerate() {
        let za = half(a.width());
        // A component against itself: forbidden iff 1/(M m) <= 2 ζ_i / M.
        if za > T::zero() {
            let start = T::one() / (T::lit(2.0) * za);
            if start <= hi {
                out.push(Interval::new(start.max(lo), hi));
            }
        }
        for b in &comps[..i] {
            let zb = half(b.width());
            let d = m_prev * (a.center() - b.center());
            let z = za + zb;
            // m ∈ [q/(d+z), q/(d-z)] for q >= 1; only q <= 4(d+z) can reach [2, 4].
            let q_first = (lo * (d - z)).floor().max(T::one());
            let q_last = (hi * (d + z)).floor() + T::one();
            let mut q = q_first;
            while q <= q_last {
                let m_min = q / (d + z);
                let m_max = if d > z { q / (d - z) } else { T::infinity() };
                if m_min <= hi && m_max >= lo {
                    out.push(Interval::new(m_min.max(lo), m_max.min(hi)));
                }
                q = q + T::one();
            }
        }
    }
    IntervalSet::from_intervals(out)
}

/// Feasible factors: `[2, 4]` minus the forbidden set.
pub fn feasible_factors<T: Real>(g: &IntervalSet<T>, m_prev: T) -> Vec<Interval<T>> {
    let forbidden = forbidden_set(g, m_prev);
    let mut gaps = Vec::new();
    let mut cursor = T::lit(M_LO);
    let mut open_left = false;
    for f in forbidden.components() {
        if f.lo > cursor {
            gaps.push((Interval::new(cursor, f.lo), open_left, true));
        }
        cursor = cursor.max(f.hi);
        open_left = true;
    }
    if cursor < T::lit(M_HI) || (!open_left && cursor == T::lit(M_HI)) {
        gaps.push((Interval::new(cursor, T::lit(M_HI)), open_left, false));
    }
    // Keep clear of forbidden endpoints by up to FACTOR_MARGIN, never more
    // than a quarter of the gap.
    gaps.into_iter()
        .map(|(gap, left, right)| {
            let pad = T::lit(FACTOR_MARGIN).min(gap.width() / T::lit(4.0));
            let lo = if left { gap.lo + pad } else { gap.lo };
            let hi = if right { gap.hi - pad } else { gap.hi };
            Interval::new(lo, hi)
        })
        .collect()
}

/// Picks a real factor for the padded set `G` (a union of disjoint closed
/// intervals) at scale `m_prev`.
///
/// With `target = None` the largest feasible factor is returned; otherwise
/// the feasible factor closest to `target` (ties go to the larger one).
pub fn select_real_factor<T: Real>(g: &IntervalSet<T>, m_prev: T, target: Option<T>) -> Result<T> {
    let feasible = feasible_factors(g, m_prev);
    let best = match target {
        None => feasible.last().map(|iv| iv.hi),
        Some(t) => {
            let t = t.max(T::lit(M_LO)).min(T::lit(M_HI));
            feasible
                .iter()
                .map(|iv| t.max(iv.lo).min(iv.hi))
                .fold(None, |acc: Option<T>, m| match acc {
                    Some(b) if (b - t).abs() < (m - t).abs() => Some(b),
                    _ => Some(m),
                })
        }
    };
    best.ok_or(RmpeError::NoFeasibleFactor)
}

/// Brute-force check that `(G + q/(M m)) ∩ G = ∅` for every `q ≠ 0`.
pub fn real_factor_is_feasible<T: Real>(g: &IntervalSet<T>, m_prev: T, m: T) -> bool {
    let Some(hull) = g.hull() else { return true };
    let step = T::one() / (m_prev * m);
    let q_max = (hull.width() / step).floor().to_i64().expect("q range fits in i64") + 1;
    (1..=q_max).all(|q| {
        let shift = T::from_i64(q).expect("q representable") * step;
        let moved = g.scale_translate(T::one(), shift).expect("unit scale");
        !moved.intersects(g)
    })
}

/// Intervals of `G`: centers `θ_i` with half-widths `ζ_i / M`.
pub fn padded_set<T: Real>(centers: &[T], half_widths: &[T]) -> IntervalSet<T> {
    assert_eq!(centers.len(), half_widths.len(), "one half-width per center");
    IntervalSet::from_intervals(
        centers.iter().zip(half_widths).map(|(&c, &h)| Interval::new(c - h, c + h)).collect(),
    )
}

/// The first `n` primes, by a sieve up to `2n(ln n + 1) + 2`.
pub fn first_primes(n: usize) -> Vec<u64> {
    assert!(n >= 1, "need at least one prime");
    let nf = n as f64;
    let limit = (2.0 * nf * (nf.ln() + 1.0)).ceil() as usize + 2;
    let mut composite = vec![false; limit + 1];
    let mut primes = Vec::with_capacity(n);
    for i in 2..=limit {
        if !composite[i] {
            primes.push(i as u64);
            if primes.len() == n {
                break;
            }
            let mut j = i * i;
            while j <= limit {
                composite[j] = true;
                j += i;
            }
        }
    }
    assert_eq!(primes.len(), n, "sieve bound too small");
    primes
}

/// The candidate primes for `t` centers and the separation they guarantee.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrimePool {
    pub primes: Vec<u64>,
    /// `1 / (2 p_a p_b)` with `a = t(t-1)/2`, `b = a + 1`, `p_0 = 1`.
    pub bound: f64,
}

impl PrimePool {
    pub fn new(t: usize) -> Self {
        assert!(t >= 1, "need at least one center");
        let a = t * (t - 1) / 2;
        let primes = first_primes(a + 1);
        let pa = if a == 0 { 1 } else { primes[a - 1] };
        let pb = primes[a];
        Self { primes, bound: 1.0 / (2.0 * pa as f64 * pb as f64) }
    }

    /// `p_a p_b`.
    pub fn pair_product(&self) -> f64 {
        1.0 / (2.0 * self.bound)
    }
}

/// `min_{i<=j, p∤k} | |θ_i - θ_j| - k/p |` with differences taken mod 1.
pub fn prime_margin(centers: &[f64], p: u64) -> f64 {
    let pf = p as f64;
    let mut best = 1.0 / pf;
    for (i, &a) in centers.iter().enumerate() {
        for &b in &centers[..i] {
            let delta = (a - b).rem_euclid(1.0);
            let base = (delta * pf).floor() as i64;
            for k in base - 1..=base + 2 {
                if k.rem_euclid(p as i64) != 0 {
                    best = best.min((delta - k as f64 / pf).abs());
                }
            }
        }
    }
    best
}

/// Same as [`prime_margin`] but over real (not wrapped) differences and all
/// `k` up to `p ⌈max|θ_i - θ_j|⌉ + 1`: the exhaustive form of the prime
/// separation lemma.
pub fn prime_margin_exhaustive(centers: &[f64], p: u64) -> f64 {
    let mut best = f64::INFINITY;
    for (i, &a) in centers.iter().enumerate() {
        for &b in &centers[..=i] {
            let d = (a - b).abs();
            let k_max = p as i64 * d.ceil() as i64 + 1;
            for k in -k_max..=k_max {
                if k.rem_euclid(p as i64) != 0 {
                    best = best.min((d - k as f64 / p as f64).abs());
                }
            }
        }
    }
    best
}

/// True when `(P + q/N) ∩ P = ∅ mod 1` for every `q` with `N ∤ q`, where
/// `P = B_T(E, η/M)` and `N = m M`. Checked through the difference arcs of
/// `P`: each must avoid the lattice `(1/N)Z` away from `0`.
pub fn prime_factor_is_feasible<T: Real>(padded: &TorusIntervalSet<T>, modulus: u64) -> bool {
    if padded.is_full() {
        return false;
    }
    let n = modulus as f64;
    let arcs = padded.arcs();
    for a in arcs {
        for b in arcs {
            let len = (a.len + b.len).to_f64_lossy();
            if len >= 1.0 {
                return false;
            }
            let lo = (a.lo - b.lo - b.len).to_f64_lossy();
            let first = (lo * n).ceil() as i64;
            let last = ((lo + len) * n).floor() as i64;
            if (first..=last).any(|k| k.rem_euclid(modulus as i64) != 0) {
                return false;
            }
        }
    }
    true
}

/// Picks the prime for the next step of the integer-power loop.
///
/// Feasibility is the direct check of [`prime_factor_is_feasible`] on
/// `B_T(E_prev, η/M_prev)`; among feasible primes the one with the largest
/// [`prime_margin`] on the centers of `M_prev E_prev` wins, ties going to the
/// smaller prime.
pub fn select_prime_factor<T: Real>(e_prev: &TorusIntervalSet<T>, m_prev: u64, eta: T, pool: &PrimePool) -> Result<u64> {
    let mf = T::from_u64(m_prev).expect("M representable");
    let padded = e_prev.neighborhood(eta / mf);
    let centers: Vec<f64> = e_prev
        .arcs()
        .iter()
        .map(|a| (a.center().to_f64_lossy() * m_prev as f64).rem_euclid(1.0))
        .collect();
    let mut best: Option<(u64, f64)> = None;
    for &p in &pool.primes {
        if !prime_factor_is_feasible(&padded, p * m_prev) {
            continue;
        }
        let margin = prime_margin(&centers, p);
        if best.is_none_or(|(_, m)| margin > m) {
            best = Some((p, margin));
        }
    }
    best.map(|(p, _)| p).ok_or(RmpeError::NoFeasiblePrime)
}

/// Which admissible-η formula applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EtaCapKind {
    Real,
    Integer,
    GappedReal,
    GappedInt,
}

/// Upper bound on `η` for each model.
pub fn eta_cap(kind: EtaCapKind, s: usize) -> f64 {
    let sf = s as f64;
    match kind {
        EtaCapKind::Real | EtaCapKind::GappedReal => 1.0 / (8.0 * sf * (2.0 * sf - 1.0)),
        EtaCapKind::Integer => {
            let poly = 3.0 * sf.powi(5) * (0.31 + 2.0 * sf.ln()).powi(2);
            (1.0f64 / 6.0).min(1.0 / poly)
        }
        EtaCapKind::GappedInt => 1.0 / (4.0 * sf * PrimePool::new(s).pair_product()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_interval_allows_four() {
        let g = padded_set(&[0.3], &[0.001]);
        assert!(forbidden_set(&g, 1.0).is_empty());
        assert_eq!(select_real_factor(&g, 1.0, None).unwrap(), 4.0);
    }

    #[test]
    fn two_centers_half_apart() {
        let g = padded_set(&[0.0, 0.5], &[0.001, 0.001]);
        let forbidden = forbidden_set(&g, 1.0);
        // Forbidden factors cluster around 2q.
        assert!(forbidden.contains_point(2.0) && forbidden.contains_point(4.0));
        assert!(!forbidden.contains_point(3.0));
        assert!(real_factor_is_feasible(&g, 1.0, 3.0));
        assert!(!real_factor_is_feasible(&g, 1.0, 2.0));
        let m = select_real_factor(&g, 1.0, None).unwrap();
        assert!(real_factor_is_feasible(&g, 1.0, m));
        assert!(m < 4.0 - 0.004);
        let m = select_real_factor(&g, 1.0, Some(3.0)).unwrap();
        assert_eq!(m, 3.0);
    }

    #[test]
    fn boundary_zeta_always_feasible() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let s = 2;
        let zeta = 1.0 / (8.0 * s as f64 * (2.0 * s as f64 - 1.0));
        for _ in 0..300 {
            let m_prev: f64 = rng.random_range(1.0..50.0);
            let h = zeta / m_prev;
            let c0: f64 = rng.random_range(0.0..0.5);
            let c1 = c0 + rng.random_range(2.0 * h..0.5);
            let g = padded_set(&[c0, c1], &[h, h]);
            assert!(forbidden_set(&g, m_prev).measure() <= 2.0);
            let m = select_real_factor(&g, m_prev, None).unwrap();
            assert!(real_factor_is_feasible(&g, m_prev, m), "m = {m}");
        }
    }

    #[test]
    fn primes() {
        assert_eq!(first_primes(4), vec![2, 3, 5, 7]);
        assert_eq!(first_primes(1), vec![2]);
        assert_eq!(first_primes(7), vec![2, 3, 5, 7, 11, 13, 17]);
        assert_eq!(first_primes(1000)[999], 7919);
        let pool = PrimePool::new(3);
        assert_eq!(pool.primes, vec![2, 3, 5, 7]);
        assert!((pool.bound - 1.0 / 70.0).abs() < 1e-15);
        assert!((PrimePool::new(1).bound - 0.25).abs() < 1e-15);
    }

    fn points(c: &[f64]) -> TorusIntervalSet<f64> {
        TorusIntervalSet::points(c)
    }

    #[test]
    fn prime_selection_examples() {
        let pool = PrimePool::new(2);
        assert_eq!(pool.primes, vec![2, 3]);
        let e = points(&[0.0, 0.5]);
        assert!(!prime_factor_is_feasible(&e.neighborhood(1e-4), 2));
        assert!(prime_factor_is_feasible(&e.neighborhood(1e-4), 3));
        assert!((prime_margin(&[0.0, 0.5], 3) - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(select_prime_factor(&e, 1, 1e-4, &pool).unwrap(), 3);

        let pool1 = PrimePool::new(1);
        for c in [0.0, 0.3, 0.77] {
            assert_eq!(select_prime_factor(&points(&[c]), 1, 0.01, &pool1).unwrap(), 2);
        }

        let e = points(&[0.1, 0.35]);
        assert!((prime_margin(&[0.1, 0.35], 2) - 0.25).abs() < 1e-15);
        assert!((prime_margin(&[0.1, 0.35], 3) - 1.0 / 12.0).abs() < 1e-15);
        assert_eq!(select_prime_factor(&e, 1, 1e-3, &pool).unwrap(), 2);
    }

    #[test]
    fn prime_feasibility_matches_translation_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for _ in 0..300 {
            let m_prev: u64 = rng.random_range(1..6);
            let p = [2u64, 3, 5][rng.random_range(0..3)];
            let arcs: Vec<(f64, f64)> = (0..rng.random_range(1..4))
                .map(|_| (rng.random::<f64>(), rng.random_range(0.0..0.03)))
                .collect();
            let set = TorusIntervalSet::from_arcs(&arcs);
            let n = p * m_prev;
            let oracle = (1..n).all(|q| {
                let moved = set.scale_translate(1.0, q as f64 / n as f64).unwrap();
                !moved.intersects(&set)
            });
            assert_eq!(prime_factor_is_feasible(&set, n), oracle, "{arcs:?} N={n}");
        }
    }

    #[test]
    fn eta_caps() {
        assert!((eta_cap(EtaCapKind::Real, 2) - 1.0 / 48.0).abs() < 1e-15);
        assert!((eta_cap(EtaCapKind::GappedInt, 2) - 1.0 / 48.0).abs() < 1e-15);
        assert!((eta_cap(EtaCapKind::Integer, 1) - 1.0 / 6.0).abs() < 1e-15);
        let s2 = 1.0 / (3.0 * 32.0 * (0.31 + 2.0 * 2f64.ln()).powi(2));
        assert!((eta_cap(EtaCapKind::Integer, 2) - s2).abs() < 1e-15);
    }
}
