use alloc::string::String;

/// Errors reported by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("site {site} out of range for a space with {len} subsystems")]
    SiteOutOfRange { site: usize, len: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("quadrature did not converge: estimate {estimate:e}, achieved error {achieved_error:e}")]
    Quadrature { estimate: f64, achieved_error: f64 },

    #[error("steady-state solve did not converge: primary residual {primary:e}, fallback residual {fallback:e}")]
    NonConvergence { primary: f64, fallback: f64 },

    #[error("steady state is not unique: null-space dimension estimate {null_dim}")]
    DegenerateSteadyState { null_dim: usize },

    #[error("generator is not symmetric under the given operator: relative residual {residual:e}")]
    SymmetryBroken { residual: f64 },

    #[error("consistency error: {0}")]
    Consistency(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
