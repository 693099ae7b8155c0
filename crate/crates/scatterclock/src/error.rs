use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Crate-wide error type.
///
/// Variants split along the exit-code contract of the command line tool:
/// configuration and input validation problems map to exit code 2,
/// runtime failures (solver non-convergence, resonant extrapolation,
/// degenerate fits, i/o) map to exit code 1.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("radial solver did not converge at k = {k:e} 1/m, l = {l}: {msg}")]
    Solver { k: f64, l: u32, msg: String },

    #[error("scattering length extrapolation diverged (near-resonant potential): {0}")]
    Resonance(String),

    #[error("k = {k:e} 1/m outside table range [{k_min:e}, {k_max:e}]; extrapolation is not supported")]
    OutOfRange { k: f64, k_min: f64, k_max: f64 },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("malformed {what}: {msg}")]
    Format { what: String, msg: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub fn geometry(msg: impl Into<String>) -> Self {
        Error::Geometry(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn format(what: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Format { what: what.into(), msg: msg.into() }
    }

    /// Process exit code for the CLI: validation problems are 2,
    /// runtime failures are 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_) | Error::Config(_) | Error::Format { .. } => 2,
            _ => 1,
        }
    }
}
