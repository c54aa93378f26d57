//! Error type shared across the crate.

/// Convenience alias used by every fallible operation in this crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// The block geometry degenerates below n = 20 (m0 and J collapse).
    #[error("sample size n = {0} too small: need n >= 20")]
    SampleSizeTooSmall(u64),

    /// A block index k fell outside the admissible range for the operation.
    #[error("block index k = {k} out of range {min}..={max}")]
    BlockOutOfRange { k: usize, min: usize, max: usize },

    /// A coordinate index fell outside the admissible range for the operation.
    #[error("index i = {i} out of range {min}..={max} for {what}")]
    IndexOutOfRange {
        i: u64,
        min: u64,
        max: u64,
        what: &'static str,
    },

    /// The observation does not cover every coordinate the estimator reads.
    #[error("observation too short: len = {len}, need at least {need}")]
    ObservationTooShort { len: usize, need: usize },

    #[error("invalid ball: {0}")]
    InvalidBall(String),

    /// An adversarial generator produced a vector outside its declared ball.
    #[error("membership violated: norm {norm} exceeds radius {radius} (shrink the knob)")]
    MembershipViolation { norm: f64, radius: f64 },

    #[error("non-finite value {value} from {context} at replication {rep}")]
    NonFinite {
        value: f64,
        context: String,
        rep: u64,
    },

    #[error("degenerate slope fit: {0}")]
    DegenerateFit(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
