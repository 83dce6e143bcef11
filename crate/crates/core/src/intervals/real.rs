use serde::{Deserialize, Serialize};

use super::{snap_tol, Unfolded};
use crate::error::{Result, RmpeError};
use crate::scalar::Real;

/// Closed interval `[lo, hi]` with `lo <= hi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Real> Interval<T> {
    pub fn new(lo: T, hi: T) -> Self {
        debug_assert!(lo <= hi, "interval endpoints out of order");
        Self { lo, hi }
    }

    pub fn point(x: T) -> Self {
        Self { lo: x, hi: x }
    }

    pub fn width(&self) -> T {
        self.hi - self.lo
    }

    pub fn center(&self) -> T {
        (self.lo + self.hi) / T::lit(2.0)
    }

    pub fn contains_point(&self, x: T) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn meets(&self, other: &Self) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn shift(&self, d: T) -> Self {
        Self { lo: self.lo + d, hi: self.hi + d }
    }
}

/// Finite disjoint union of closed intervals of the real line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IntervalSet<T> {
    intervals: Vec<Interval<T>>,
}

impl<T: Real> Default for IntervalSet<T> {
    fn default() -> Self {
        Self::empty()
    }
}

impl<T: Real> IntervalSet<T> {
    pub fn empty() -> Self {
        Self { intervals: Vec::new() }
    }

    pub fn single(lo: T, hi: T) -> Self {
        Self::from_intervals(vec![Interval::new(lo, hi)])
    }

    /// Builds the set of isolated points `points`.
    pub fn points(points: &[T]) -> Self {
        Self::from_intervals(points.iter().map(|&x| Interval::point(x)).collect())
    }

    /// Canonicalizes an arbitrary list of intervals.
    ///
    /// Panics on NaN endpoints or on `lo > hi` beyond the snap tolerance.
    pub fn from_intervals(intervals: Vec<Interval<T>>) -> Self {
        let mut set = Self { intervals };
        set.canonicalize();
        set
    }

    pub fn try_from_pairs(pairs: &[(T, T)]) -> Result<Self> {
        let mut out = Vec::with_capacity(pairs.len());
        for &(lo, hi) in pairs {
            if lo.is_nan() || hi.is_nan() {
                return Err(RmpeError::InvalidArgument("NaN interval endpoint".into()));
            }
            if lo > hi + snap_tol(hi) {
                return Err(RmpeError::InvalidArgument(format!(
                    "interval [{lo}, {hi}] has lo > hi"
                )));
            }
            out.push(Interval { lo, hi: hi.max(lo) });
        }
        Ok(Self::from_intervals(out))
    }

    fn canonicalize(&mut self) {
        for iv in &mut self.intervals {
            assert!(!iv.lo.is_nan() && !iv.hi.is_nan(), "NaN interval endpoint");
            if iv.hi < iv.lo {
                assert!(iv.lo - iv.hi <= snap_tol(iv.lo), "interval endpoints out of order");
                iv.hi = iv.lo;
            }
        }
        self.intervals
            .sort_by(|a, b| a.lo.partial_cmp(&b.lo).expect("finite endpoints"));
        let mut merged: Vec<Interval<T>> = Vec::with_capacity(self.intervals.len());
        for iv in self.intervals.drain(..) {
            match merged.last_mut() {
                Some(last) if iv.lo <= last.hi + snap_tol(last.hi) => {
                    last.hi = last.hi.max(iv.hi);
                }
                _ => merged.push(iv),
            }
        }
        self.intervals = merged;
    }

    pub fn components(&self) -> &[Interval<T>] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn count_components(&self) -> usize {
        self.intervals.len()
    }

    pub fn measure(&self) -> T {
        self.intervals
            .iter()
            .fold(T::zero(), |acc, iv| acc + iv.width())
    }

    pub fn hull(&self) -> Option<Interval<T>> {
        Some(Interval {
            lo: self.intervals.first()?.lo,
            hi: self.intervals.last()?.hi,
        })
    }

    /// `B(T, eta)`: the union of `[t - eta, t + eta]` over `t` in the set.
    pub fn neighborhood(&self, eta: T) -> Self {
        assert!(eta >= T::zero(), "neighborhood radius must be non-negative");
        Self::from_intervals(
            self.intervals
                .iter()
                .map(|iv| Interval { lo: iv.lo - eta, hi: iv.hi + eta })
                .collect(),
        )
    }

    /// Image under `t -> c t + d`.
    pub fn scale_translate(&self, c: T, d: T) -> Result<Self> {
        if c == T::zero() || c.is_nan() {
            return Err(RmpeError::InvalidArgument("scale factor must be non-zero".into()));
        }
        Ok(Self::from_intervals(
            self.intervals
                .iter()
                .map(|iv| {
                    let (a, b) = (c * iv.lo + d, c * iv.hi + d);
                    Interval { lo: a.min(b), hi: a.max(b) }
                })
                .collect(),
        ))
    }

    pub fn contains_point(&self, x: T) -> bool {
        // Components are sorted by `lo`; find the last one starting at or before x.
        let idx = self.intervals.partition_point(|iv| iv.lo <= x);
        idx > 0 && x <= self.intervals[idx - 1].hi
    }

    /// Closed-set intersection test; touching endpoints count.
    pub fn intersects(&self, other: &Self) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.intervals.len() && j < other.intervals.len() {
            let (a, b) = (&self.intervals[i], &other.intervals[j]);
            if a.meets(b) {
                return true;
            }
            if a.hi < b.hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        false
    }

    /// Whether `interval` meets the set.
    pub fn meets_interval(&self, interval: &Interval<T>) -> bool {
        let idx = self.intervals.partition_point(|iv| iv.hi < interval.lo);
        idx < self.intervals.len() && self.intervals[idx].lo <= interval.hi
    }

    /// `other ⊂ self`.
    pub fn contains(&self, other: &Self) -> bool {
        other.intervals.iter().all(|b| {
            let idx = self.intervals.partition_point(|iv| iv.lo <= b.lo);
            idx > 0 && b.hi <= self.intervals[idx - 1].hi
        })
    }

    pub fn intersection(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.intervals.len() && j < other.intervals.len() {
            let (a, b) = (&self.intervals[i], &other.intervals[j]);
            let lo = a.lo.max(b.lo);
            let hi = a.hi.min(b.hi);
            if lo <= hi {
                out.push(Interval { lo, hi });
            }
            if a.hi < b.hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self::from_intervals(out)
    }

    /// Resolves the aliasing of the pieces `pieces` (already divided by `m`)
    /// against the previous estimate: for each piece, the unique integer `q`
    /// such that `piece + q/m` meets `self`.
    ///
    /// The shift range scanned is
    /// `[floor(m (min E - hi)) - 1, ceil(m (max E - lo)) + 1]`, which contains
    /// every shift that can possibly reach the hull of `self`.
    pub fn unfold(&self, pieces: &[Interval<T>], m: T) -> Result<Vec<Unfolded<T>>> {
        let hull = self
            .hull()
            .ok_or_else(|| RmpeError::InvalidArgument("previous estimate is empty".into()))?;
        if !(m > T::zero()) {
            return Err(RmpeError::InvalidArgument("amplifying factor must be positive".into()));
        }
        let mut out = Vec::with_capacity(pieces.len());
        for (index, piece) in pieces.iter().enumerate() {
            let q_lo = (m * (hull.lo - piece.hi)).floor().to_i64().unwrap_or(i64::MIN) - 1;
            let q_hi = (m * (hull.hi - piece.lo)).ceil().to_i64().unwrap_or(i64::MAX) + 1;
            let mut found: Option<Unfolded<T>> = None;
            let mut count = 0usize;
            for q in q_lo..=q_hi {
                let shifted = piece.shift(T::from_i64(q).expect("shift representable") / m);
                if self.meets_interval(&shifted) {
                    count += 1;
                    found.get_or_insert(Unfolded { interval: shifted, q });
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
