use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter `{name}` out of domain: {value} ({expected})")]
    ParameterDomain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("prox oracle unsupported for objective `{0}` (not separable)")]
    UnsupportedOracle(String),
    #[error("time {t} is before t0 = {t0}")]
    TimeDomain { t: f64, t0: f64 },
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("wrong reformulation: {0}")]
    WrongReformulation(&'static str),
    #[error("integration diverged after t = {last_good_t}")]
    Divergence { last_good_t: f64 },
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("trajectory ends at {end} before t** = {t_star_star}")]
    InsufficientHorizon { end: f64, t_star_star: f64 },
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit status: 1 for invalid input, 2 for divergence, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ParameterDomain { .. }
            | Error::DimensionMismatch { .. }
            | Error::TimeDomain { .. }
            | Error::Infeasible(_)
            | Error::WrongReformulation(_)
            | Error::Validation(_)
            | Error::Config(_) => 1,
            Error::Divergence { .. } => 2,
            Error::UnsupportedOracle(_)
            | Error::InsufficientData(_)
            | Error::InsufficientHorizon { .. }
            | Error::Io(_) => 3,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::ParameterDomain {
            name,
            value,
            expected: "finite and > 0",
        })
    }
}
