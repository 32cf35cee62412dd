use core::fmt;

use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument fell outside the domain of an operation.
    Domain(String),
    /// Geometry that makes a distance or direction undefined.
    DegenerateGeometry(String),
    /// The directivity factor is too small for curvature-based surrogates.
    UnsupportedRegime { p: f64 },
    /// A state invariant that should be unreachable was violated.
    Invariant(String),
    /// The conic solver did not reach a usable point.
    Solver(String),
    /// A configuration value failed validation; `key` names the first offender.
    Config { key: &'static str, reason: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::DegenerateGeometry(msg) => write!(f, "degenerate geometry: {msg}"),
            Error::UnsupportedRegime { p } => write!(
                f,
                "unsupported regime: directivity p = {p} < 2; curvature surrogates need p >= 2 \
                 (use the two-stage method instead)"
            ),
            Error::Invariant(msg) => write!(f, "invariant violated: {msg}"),
            Error::Solver(msg) => write!(f, "solver failure: {msg}"),
            Error::Config { key, reason } => write!(f, "invalid config key `{key}`: {reason}"),
        }
    }
}

impl core::error::Error for Error {}
