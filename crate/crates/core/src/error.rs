use thiserror::Error;

/// Errors raised by the spectral and scattering routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("off-diagonal coefficient at site {site} is not strictly positive")]
    NonPositiveCoefficient { site: i64 },

    #[error("coefficient at site {site} is not finite")]
    NonFiniteEntry { site: i64 },

    #[error("periodic background needs equal, non-empty a and b arrays (got {a_len} and {b_len})")]
    InvalidPeriod { a_len: usize, b_len: usize },

    #[error("perturbation window [{start}, {end}] does not fit inside the truncation")]
    WindowTooSmall { start: i64, end: i64 },

    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("invalid boundary point: {0}")]
    InvalidPoint(String),

    #[error("energy {lambda} lies within the band-edge margin of {edge}")]
    BandEdge { lambda: f64, edge: f64 },

    #[error("stripping denominator vanished (site {site:?})")]
    PoleHit { site: Option<i64> },

    #[error("Herglotz branch selection failed: {0}")]
    BranchFailure(String),

    #[error("cross-check failed: {0}")]
    CrossCheckFailure(String),

    #[error("no open scattering channel at energy {lambda}")]
    NoOpenChannel { lambda: f64 },

    #[error("Jost solution vanishes at site 0 for energy {lambda}")]
    NormalizationPole { lambda: f64 },

    #[error("conjugate Jost solutions are linearly dependent at energy {lambda}")]
    DegenerateBasis { lambda: f64 },

    #[error("requested time {t} exceeds the propagation horizon {t_max}")]
    HorizonExceeded { t: f64, t_max: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("LAPACK routine {routine} returned info = {info}")]
    Lapack { routine: &'static str, info: i32 },
}

pub type Result<T> = std::result::Result<T, Error>;
