use serde::{Deserialize, Serialize};

use super::{snap_tol, Interval, Unfolded};
use crate::error::{Result, RmpeError};
use crate::scalar::Real;

/// Closed arc of the circle `R/Z` starting at `lo ∈ [0, 1)` with length
/// `len ∈ [0, 1]`; it covers `[lo, lo + len]` mod 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arc<T> {
    pub lo: T,
    pub len: T,
}

impl<T: Real> Arc<T> {
    /// End point of the lifted interval; may exceed 1.
    pub fn hi(&self) -> T {
        self.lo + self.len
    }

    pub fn center(&self) -> T {
        (self.lo + self.len / T::lit(2.0)).frac1()
    }

    pub fn lifted(&self) -> Interval<T> {
        Interval { lo: self.lo, hi: self.hi() }
    }

    pub fn contains_point(&self, x: T) -> bool {
        let off = (x - self.lo).frac1();
        off <= self.len + snap_tol(self.len) || self.len >= T::one()
    }
}

/// Finite disjoint union of closed arcs of the circle `R/Z`.
///
/// Canonical form: arcs sorted by start point, pairwise disjoint and
/// non-touching modulo 1, total length at most 1. The full circle is the
/// single arc `(0, 1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TorusIntervalSet<T> {
    arcs: Vec<Arc<T>>,
}

impl<T: Real> Default for TorusIntervalSet<T> {
    fn default() -> Self {
        Self::empty()
    }
}

impl<T: Real> TorusIntervalSet<T> {
    pub fn empty() -> Self {
        Self { arcs: Vec::new() }
    }

    pub fn full() -> Self {
        Self { arcs: vec![Arc { lo: T::zero(), len: T::one() }] }
    }

    pub fn points(points: &[T]) -> Self {
        Self::from_lifted(points.iter().map(|&x| Interval::point(x)).collect())
    }

    /// Arcs given as `(start, length)` pairs; starts are reduced mod 1.
    pub fn from_arcs(arcs: &[(T, T)]) -> Self {
        Self::from_lifted(
            arcs.iter()
                .map(|&(lo, len)| {
                    assert!(len >= T::zero(), "arc length must be non-negative");
                    Interval { lo, hi: lo + len }
                })
                .collect(),
        )
    }

    /// Projects real intervals onto the circle.
    pub fn from_lifted(intervals: Vec<Interval<T>>) -> Self {
        let mut arcs = Vec::with_capacity(intervals.len());
        for iv in intervals {
            assert!(!iv.lo.is_nan() && !iv.hi.is_nan(), "NaN arc endpoint");
            let len = (iv.hi - iv.lo).max(T::zero());
            if len >= T::one() {
                return Self::full();
            }
            arcs.push(Arc { lo: iv.lo.frac1(), len });
        }
        let mut set = Self { arcs };
        set.canonicalize();
        set
    }

    fn canonicalize(&mut self) {
        self.arcs
            .sort_by(|a, b| a.lo.partial_cmp(&b.lo).expect("finite endpoints"));
        let mut merged: Vec<Interval<T>> = Vec::with_capacity(self.arcs.len());
        for arc in self.arcs.drain(..) {
            let iv = arc.lifted();
            match merged.last_mut() {
                Some(last) if iv.lo <= last.hi + snap_tol(last.hi) => {
                    last.hi = last.hi.max(iv.hi);
                }
                _ => merged.push(iv),
            }
        }
        // Close the seam: the last lifted interval may run past 1 and reach
        // the first ones.
        while merged.len() > 1 {
            let first = merged[0];
            let last = merged.last_mut().expect("non-empty");
            let wrapped = first.lo + T::one();
            if wrapped <= last.hi + snap_tol(last.hi) {
                last.hi = last.hi.max(first.hi + T::one());
                merged.remove(0);
            } else {
                break;
            }
        }
        let total = merged.iter().fold(T::zero(), |acc, iv| acc + iv.width());
        if total >= T::one() - snap_tol(T::one())
            || merged.iter().any(|iv| iv.width() >= T::one())
        {
            *self = Self::full();
            return;
        }
        self.arcs = merged
            .into_iter()
            .map(|iv| Arc { lo: iv.lo, len: iv.width() })
            .collect();
    }

    pub fn arcs(&self) -> &[Arc<T>] {
        &self.arcs
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.arcs.len() == 1 && self.arcs[0].len >= T::one()
    }

    pub fn count_components(&self) -> usize {
        self.arcs.len()
    }

    pub fn measure(&self) -> T {
        self.arcs
            .iter()
            .fold(T::zero(), |acc, a| acc + a.len)
            .min(T::one())
    }

    /// `B_T(T, eta)`; returns the full circle once the arcs cover it.
    pub fn neighborhood(&self, eta: T) -> Self {
        assert!(eta >= T::zero(), "neighborhood radius must be non-negative");
        if self.is_full() {
            return Self::full();
        }
        Self::from_lifted(
            self.arcs
                .iter()
                .map(|a| Interval { lo: a.lo - eta, hi: a.hi() + eta })
                .collect(),
        )
    }

    /// Image of each lifted arc under `t -> c t + d`, reduced mod 1.
    pub fn scale_translate(&self, c: T, d: T) -> Result<Self> {
        if c == T::zero() || c.is_nan() {
            return Err(RmpeError::InvalidArgument("scale factor must be non-zero".into()));
        }
        Ok(Self::from_lifted(
            self.arcs
                .iter()
                .map(|a| {
                    let (x, y) = (c * a.lo + d, c * a.hi() + d);
                    Interval { lo: x.min(y), hi: x.max(y) }
                })
                .collect(),
        ))
    }

    pub fn contains_point(&self, x: T) -> bool {
        self.arcs.iter().any(|a| a.contains_point(x))
    }

    /// Pieces of the set inside `[0, 1]`, with the seam point duplicated at
    /// both ends so that closed-set predicates see `0 ≡ 1`.
    fn pieces(&self) -> Vec<Interval<T>> {
        let one = T::one();
        let mut out = Vec::with_capacity(self.arcs.len() + 2);
        for a in &self.arcs {
            let hi = a.hi();
            if hi >= one {
                out.push(Interval { lo: a.lo, hi: one });
                out.push(Interval { lo: T::zero(), hi: (hi - one).min(one) });
            } else {
                out.push(Interval { lo: a.lo, hi });
            }
            if a.lo == T::zero() {
                out.push(Interval::point(one));
            }
        }
        out.sort_by(|a, b| a.lo.partial_cmp(&b.lo).expect("finite endpoints"));
        out
    }

    pub fn intersects(&self, other: &Self) -> bool {
        let (a, b) = (self.pieces(), other.pieces());
        a.iter().any(|x| b.iter().any(|y| x.meets(y)))
    }

    /// Whether the closed arc `[lo, lo + len]` meets the set.
    pub fn meets_arc(&self, lo: T, len: T) -> bool {
        if self.is_full() {
            return true;
        }
        self.arcs.iter().any(|a| {
            // Offsets of each start relative to the other's start.
            let d1 = (lo - a.lo).frac1();
            let d2 = (a.lo - lo).frac1();
            d1 <= a.len + snap_tol(a.len) || d2 <= len + snap_tol(len)
        })
    }

    /// `other ⊂ self`.
    pub fn contains(&self, other: &Self) -> bool {
        if self.is_full() {
            return true;
        }
        if other.is_full() {
            return false;
        }
        other.arcs.iter().all(|b| {
            self.arcs.iter().any(|a| {
                let off = (b.lo - a.lo).frac1();
                let off = if off > T::one() - snap_tol(T::one()) { T::zero() } else { off };
                off + b.len <= a.len + snap_tol(a.len)
            })
        })
    }

    pub fn intersection(&self, other: &Self) -> Self {
        let (a, b) = (self.pieces(), other.pieces());
        let mut out = Vec::new();
        for x in &a {
            for y in &b {
                let lo = x.lo.max(y.lo);
                let hi = x.hi.min(y.hi);
                if lo <= hi {
                    out.push(Interval { lo, hi });
                }
            }
        }
        Self::from_lifted(out)
    }

    /// Torus counterpart of [`super::IntervalSet::unfold`]: `m` must be an
    /// integer and the candidate shifts are `q ∈ {0, …, m - 1}`, translates
    /// taken mod 1.
    pub fn unfold(&self, pieces: &[Interval<T>], m: T) -> Result<Vec<Unfolded<T>>> {
        if self.is_empty() {
            return Err(RmpeError::InvalidArgument("previous estimate is empty".into()));
        }
        let rounded = m.round();
        if !(rounded >= T::one()) || (m - rounded).abs() > T::lit(1e-9) * rounded.max(T::one())
        {
            return Err(RmpeError::InvalidArgument(format!(
                "integer-power unfolding needs an integral factor, got {m}"
            )));
        }
        let modulus = rounded.to_i64().expect("factor fits in i64");
        let mut out = Vec::with_capacity(pieces.len());
        for (index, piece) in pieces.iter().enumerate() {
            let len = piece.width();
            let mut found: Option<Unfolded<T>> = None;
            let mut count = 0usize;
            for q in 0..modulus {
                let shift = T::from_i64(q).expect("shift representable") / rounded;
                if self.meets_arc((piece.lo + shift).frac1(), len) {
                    count += 1;
                    found.get_or_insert_with(|| {
                        let lo = (piece.lo + shift).frac1();
                        Unfolded { interval: Interval { lo, hi: lo + len }, q }
                    });
                }
            }
            match (count, found) {
                (1, Some(u)) => out.push(u),
                _ => return Err(RmpeError::Ambiguity { index, count }),
            }
        }
        Ok(out)
    }
}
