//! Floating-point abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rustfft::FftNum;
use serde::{de::DeserializeOwned, Serialize};

/// Real scalar used throughout the estimators: `f32` or `f64`.
///
/// Everything that depends on the precision of the format (snapping of
/// interval endpoints, rank cutoffs) is exposed here so the algorithms can
/// stay precision-agnostic.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + FftNum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Relative snap tolerance applied when canonicalizing interval endpoints.
    const SNAP: f64;

    /// Relative cutoff below which a singular value counts as zero.
    const RANK_CUTOFF: f64;

    /// Lossless-enough conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Fractional part in `[0, 1)`.
    #[inline]
    fn frac1(self) -> Self {
        let f = self - self.floor();
        if f >= Self::one() {
            Self::zero()
        } else {
            f
        }
    }

    /// Distance on the unit circle, in `[0, 1/2]`.
    #[inline]
    fn torus_dist(self, other: Self) -> Self {
        let d = (self - other).frac1();
        d.min(Self::one() - d)
    }

    #[inline]
    fn two_pi() -> Self {
        Self::TAU()
    }
}

impl Real for f64 {
    const SNAP: f64 = 1e-15;
    const RANK_CUTOFF: f64 = 1e-12;
}

impl Real for f32 {
    const SNAP: f64 = 1e-6;
    const RANK_CUTOFF: f64 = 1e-5;
}
