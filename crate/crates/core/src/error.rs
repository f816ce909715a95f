//! Crate-wide error type.

/// Errors surfaced by the library.
///
/// Numerical routines return `Err` only for precondition violations and
/// irrecoverable states; quantities that are legitimately infinite (a
/// divergent seminorm, a weight evaluated off its support) are reported
/// through their result types instead.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid exponent interval [{lower}, {upper}): need 1 <= lower < upper")]
    BadSupport { lower: f64, upper: f64 },

    #[error("exponent {p} outside tabulated hull [{lo}, {hi}]")]
    OutsideTabulatedHull { p: f64, lo: f64, hi: f64 },

    #[error("{what} must be finite, got {value}")]
    NonFinite { what: &'static str, value: f64 },

    #[error("{what}: {why}")]
    BadParameter { what: &'static str, why: String },

    #[error("table needs at least {need} nodes, got {got}")]
    TableTooShort { need: usize, got: usize },

    #[error("table abscissae must be strictly increasing (index {index})")]
    NotIncreasing { index: usize },

    #[error("table is not convex: max deviation from convex envelope {gap:.3e} exceeds tolerance {tol:.3e}")]
    NotConvex { gap: f64, tol: f64 },

    #[error("conjugate is infinite on the whole requested grid")]
    ConjugateInfinite,

    #[error(
        "weight has bounded exponent support [{lower}, {upper}); no Orlicz space corresponds to it"
    )]
    BoundedSupport { lower: f64, upper: f64 },

    #[error("Young function is not invertible at {y}: {why}")]
    NotInvertible { y: f64, why: String },

    #[error("lattice mismatch: {why}")]
    GridMismatch { why: String },

    #[error("dimension {d} unsupported here (supported: {supported})")]
    BadDimension { d: usize, supported: &'static str },

    #[error(
        "lattice too large for pairwise sweep: n = {n}, cap = {cap} (subsample the grid first)"
    )]
    LatticeTooLarge { n: usize, cap: usize },

    #[error("empty input: {what}")]
    Empty { what: &'static str },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn bad_param(what: &'static str, why: impl Into<String>) -> Self {
        Error::BadParameter {
            what,
            why: why.into(),
        }
    }
}
