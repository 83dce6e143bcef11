//! Finite unions of closed intervals on the real line and on the circle
//! `R/Z`, the carriers of every estimate the driver maintains.
//!
//! Both set types are kept in canonical form: components sorted, pairwise
//! disjoint, and merged whenever two of them touch. Endpoints that differ by
//! less than the scalar's snap tolerance are treated as touching.

mod real;
mod torus;

pub use real::{Interval, IntervalSet};
pub use torus::{Arc, TorusIntervalSet};

use crate::scalar::Real;

/// A translated interval produced by [`IntervalSet::unfold`] or
/// [`TorusIntervalSet::unfold`], together with the unique shift `q`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Unfolded<T> {
    pub interval: Interval<T>,
    pub q: i64,
}

#[inline]
pub(crate) fn snap_tol<T: Real>(x: T) -> T {
    T::lit(T::SNAP) * x.abs().max(T::one())
}
