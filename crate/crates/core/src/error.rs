use thiserror::Error;

/// Failures raised by the estimation routines.
///
/// Several of these are *statistical* failures rather than programming
/// errors: they signal that a probabilistic guarantee did not hold on a given
/// run. The driver records them in the trace instead of propagating them.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum RmpeError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("interval {index} admits {count} unfolding shifts (expected exactly one)")]
    Ambiguity { index: usize, count: usize },

    #[error("no point of the filtered signal exceeds the detection threshold")]
    EmptyLevelSet,

    #[error("{found} spectral windows exceed the declared number of dominant eigenvalues {max}")]
    TooManyWindows { found: usize, max: usize },

    #[error("Hankel matrix has numerical rank below {expected}")]
    RankDeficiency { expected: usize },

    #[error("no amplifying factor in [2, 4] avoids the forbidden set")]
    NoFeasibleFactor,

    #[error("no prime in the pool separates the padded estimate")]
    NoFeasiblePrime,

    #[error("infeasible parameters: {0}")]
    InfeasibleParams(String),

    #[error("invalid spectrum model: {0}")]
    InvalidModel(String),
}

pub type Result<T> = std::result::Result<T, RmpeError>;
