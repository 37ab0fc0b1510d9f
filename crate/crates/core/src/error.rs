use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("Fock cutoff {cutoff} leaves trace deficit {deficit:.3e} (limit {limit:.1e})")]
    TruncationDeficit { cutoff: usize, deficit: f64, limit: f64 },

    #[error("quadrature did not converge: error estimate {estimate:.3e} exceeds tolerance {tolerance:.1e}")]
    QuadratureNonConvergence { estimate: f64, tolerance: f64 },

    #[error("derivative series did not converge: tail bound {tail:.3e} with coefficient {coefficient:.4} at order {order}")]
    SeriesNotConverged { tail: f64, coefficient: f64, order: usize },

    #[error("trace drifted by {drift:.3e} at t = {time}: increase the cutoff or reduce the step")]
    TraceDrift { drift: f64, time: f64 },

    #[error("step {step} violates the stability bound (step*gamma*(1+2nbar)*cutoff = {bound:.3} >= 0.5)")]
    Unstable { step: f64, bound: f64 },

    #[error("P function is singular here ({0}); it has no pointwise values")]
    Singular(&'static str),

    #[error("transform norm {norm:.8} deviates from 1; enlarge the grid to at least +/-{suggested_extent:.2}")]
    Aliasing { norm: f64, suggested_extent: f64 },

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
