use thiserror::Error;

/// Errors surfaced by the library. Each variant name doubles as the
/// machine-readable error name printed by the CLI on exit code 1.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Quantile requested at p <= 0 or p >= 1.
    #[error("quantile undefined for p = {0} (requires inner (0,1))")]
    QuantileUndefined(f64),
    /// Root bracket endpoints do not straddle a sign change.
    #[error("bracket-not-straddling: f({lo}) = {flo}, f({hi}) = {fhi}")]
    BracketNotStraddling { lo: f64, hi: f64, flo: f64, fhi: f64 },
    /// Root finder hit its iteration budget before converging.
    #[error("max-iterations-exceeded after {0} iterations")]
    MaxIterationsExceeded(u32),
    /// Operation requires at least one observation.
    #[error("empty summary: operation requires n >= 1")]
    EmptySummary,
    /// Operation requires more observations than were supplied.
    #[error("insufficient-samples: requires n >= {required}, got {got}")]
    InsufficientSamples { required: u64, got: u64 },
    /// V_n(theta) = 0 with S_n(theta) != 0, or a zero self-normalizing denominator.
    #[error("degenerate-sample: self-normalizing denominator is zero")]
    DegenerateSample,
    /// A mixture grid had a negative weight or weights not summing to one.
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    /// Parameter outside its admissible domain.
    #[error("invalid parameter {name}: {value} ({constraint})")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },
    /// I_R threshold Z/alpha lies at or below the kernel minimum, so no
    /// positive root y* exists.
    #[error("no-root: Z/alpha = exp({ln_target}) does not exceed I_R(0,u) = exp({ln_min})")]
    NoRoot { ln_target: f64, ln_min: f64 },
    /// The e-variable minimum already meets the rejection threshold, so the
    /// inverted confidence set is empty.
    #[error("minimum exceeds threshold: e(center) = {e_center} >= {threshold}")]
    MinimumExceedsThreshold { e_center: f64, threshold: f64 },
    /// Rejection was observed at a small alpha but not at a larger one.
    #[error("non-nested family: rejected at alpha = {alpha_lo} but not at alpha = {alpha_hi}")]
    NonNestedFamily { alpha_lo: f64, alpha_hi: f64 },
    /// Confidence-sequence index ran behind its burn-in.
    #[error("confidence sequence index k = {k} is below burn-in m = {m}")]
    IndexBelowBurnIn { k: u64, m: u64 },
    /// Input data could not be parsed.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    /// I/O failure while reading data.
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Short machine-readable name for CLI diagnostics.
    pub fn name(&self) -> &'static str {
        match self {
            Error::QuantileUndefined(_) => "quantile-undefined",
            Error::BracketNotStraddling { .. } => "bracket-not-straddling",
            Error::MaxIterationsExceeded(_) => "max-iterations-exceeded",
            Error::EmptySummary => "empty-summary",
            Error::InsufficientSamples { .. } => "insufficient-samples",
            Error::DegenerateSample => "degenerate-sample",
            Error::InvalidGrid(_) => "invalid-grid",
            Error::InvalidParameter { .. } => "invalid-parameter",
            Error::NoRoot { .. } => "no-root",
            Error::MinimumExceedsThreshold { .. } => "empty-interval",
            Error::NonNestedFamily { .. } => "non-nested-family",
            Error::IndexBelowBurnIn { .. } => "index-below-burn-in",
            Error::Parse { .. } => "parse-error",
            Error::Io(_) => "io-error",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
