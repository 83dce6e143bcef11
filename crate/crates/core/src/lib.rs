//! Robust multi-step phase estimation: recover the dominant eigenvalues of a
//! unitary from noisy Hadamard-test samples at adaptively amplified powers.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the `*F64`
//! aliases below fix the common choice.

pub mod audit;
pub mod driver;
pub mod error;
pub mod esprit;
pub mod factors;
pub mod gapless;
pub mod intervals;
pub mod linalg;
pub mod measurement;
pub mod scalar;

pub use driver::{
    compute_params, run_rmpe, run_rmpe_with, runtime_accounting, verify_estimate_properties, Estimate, FailureReason,
    Overrides, RunOptions, RunParams, RunTrace, Variant,
};
pub use error::{Result, RmpeError};
pub use intervals::{Interval, IntervalSet, TorusIntervalSet};
pub use measurement::{MomentSignal, SpectrumModel};
pub use scalar::Real;

pub type IntervalSetF64 = IntervalSet<f64>;
pub type TorusIntervalSetF64 = TorusIntervalSet<f64>;
pub type SpectrumModelF64 = SpectrumModel<f64>;
pub type MomentSignalF64 = MomentSignal<f64>;
pub type RunParamsF64 = RunParams<f64>;
pub type RunTraceF64 = RunTrace<f64>;
pub type IntervalSetF32 = IntervalSet<f32>;
pub type SpectrumModelF32 = SpectrumModel<f32>;
