use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("lemniscate shape parameter a = {0} gives no figure-eight (need a > 1/2)")]
    NotFigureEight(f64),

    #[error("trajectory quadrature not converged: endpoint moved by {delta:e} on step doubling")]
    QuadratureNotConverged { delta: f64 },

    #[error("theta4 has imaginary residue {residue:e} (open trajectory or quadrature failure)")]
    NonRealTheta4 { residue: f64 },

    #[error("root finder did not converge: {0}")]
    RootNotFound(String),

    #[error("Fock cutoff {cutoff} too small for block 2m = {twice_m}: top-level population {leakage:e}")]
    Leakage { twice_m: i32, cutoff: usize, leakage: f64 },

    #[error("simulation not converged after {attempts} refinements (step delta {step_delta:e}, cutoff delta {cutoff_delta:e})")]
    NotConverged { attempts: usize, step_delta: f64, cutoff_delta: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
