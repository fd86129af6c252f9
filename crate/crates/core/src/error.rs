use std::path::PathBuf;

/// Errors raised by the numerical laboratory.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("unsupported dimension D = {0} (supported: 4..=8)")]
    UnsupportedDimension(usize),

    #[error("quadrature did not converge: {0}")]
    Divergence(String),

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("discretization anomaly: {0}")]
    DiscretizationAnomaly(String),

    #[error("configuration outside the validity regime: {0}")]
    OutOfRegime(String),

    #[error("modulation fit failed: {0}")]
    FitFailure(String),

    #[error("sign enumeration guard: N = {0} exceeds 4")]
    CombinatorialGuard(usize),

    #[error("log window degenerate: scale ratio {0} must exceed e")]
    LogWindowDegenerate(f64),

    #[error("non-finite state at t = {t}")]
    Instability { t: f64 },

    #[error("bubble scale undefined: {0}")]
    UndefinedScale(String),

    #[error("construction failed at property P{property}: {detail}")]
    Construction { property: usize, detail: String },

    #[error("integration failed at t = {t}: {detail}")]
    Integration { t: f64, detail: String },

    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error("config validation failed: {}", .0.join("; "))]
    ConfigValidation(Vec<String>),

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    /// Process exit code for the command-line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ConfigParse(_) | Error::ConfigValidation(_) | Error::UnsupportedDimension(_) => 2,
            Error::Io { .. } => 4,
            _ => 3,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
