use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised anywhere in the library.
///
/// Variants fall into three groups, used by the CLI to pick an exit code:
/// parameter errors, resource caps, and I/O / format errors.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not a prime")]
    NotPrime(u64),

    #[error("valuation of 0 is not a finite integer")]
    ZeroValuation,

    #[error("p^{exponent} overflows 64-bit integers (p = {p})")]
    PowerOverflow { p: u64, exponent: u32 },

    #[error("box of {requested} points exceeds the enumeration cap of {cap}")]
    EnumerationCap { requested: u128, cap: u64 },

    #[error("storing levels 0..={level} needs {requested} values, above the memory cap of {cap}")]
    MemoryCap { level: usize, requested: u128, cap: u64 },

    #[error("invalid increment law: {0}")]
    Law(#[from] LawError),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("level {k} exceeds truncation level {kmax}")]
    LevelOutOfRange { k: usize, kmax: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("empty sample")]
    EmptySample,

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by a size or memory limit rather than a bad value.
    pub fn is_resource_cap(&self) -> bool {
        matches!(
            self,
            Error::PowerOverflow { .. } | Error::EnumerationCap { .. } | Error::MemoryCap { .. }
        )
    }
}

/// Reason an increment law failed validation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LawError {
    #[error("alpha must be positive and finite, got {0}")]
    NonPositiveAlpha(f64),

    #[error("sigma must be positive and finite, got {0}")]
    NonPositiveSigma(f64),

    #[error("E|xi| infinite: pareto alpha = {0} <= 1")]
    InfiniteMean(f64),

    #[error("alpha = {alpha} outside the window ({lower}, {upper}) for H = {hurst}, q = {q}")]
    OutsideWindow {
        alpha: f64,
        lower: f64,
        upper: f64,
        hurst: f64,
        q: f64,
    },

    #[error("window check applies only to the pareto law")]
    NotPareto,
}
