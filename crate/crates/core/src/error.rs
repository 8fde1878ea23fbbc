use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cutoff must be at least 2, got {0}")]
    InvalidCutoff(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("zero-norm state")]
    ZeroNorm,
    #[error("norm deficit {deficit:.3e} after truncation exceeds tolerance {tol:.1e}")]
    TruncationDeficit { deficit: f64, tol: f64 },
    #[error("no convergence over the cutoff schedule (last change {last_change:.3e}, tol {tol:.1e})")]
    NotConverged { last_change: f64, tol: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate measurement angles: |sin(theta_a - theta_b)| = {0:.3e}")]
    DegenerateAngles(f64),
    #[error("code-space weight {weight:.4} below {min}")]
    LowCodespaceWeight { weight: f64, min: f64 },
    #[error("sampling grid captures {mass:.6} of the outcome density")]
    GridMass { mass: f64 },
    #[error("outcome density vanishes on the sampling grid")]
    VanishingDensity,
    #[error("unknown identity '{0}'")]
    UnknownIdentity(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short machine-readable tag, used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidCutoff(_) => "invalid_cutoff",
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::ZeroNorm => "zero_norm",
            Error::TruncationDeficit { .. } => "truncation_deficit",
            Error::NotConverged { .. } => "not_converged",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::DegenerateAngles(_) => "degenerate_angles",
            Error::LowCodespaceWeight { .. } => "low_codespace_weight",
            Error::GridMass { .. } => "grid_mass",
            Error::VanishingDensity => "vanishing_density",
            Error::UnknownIdentity(_) => "unknown_identity",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
