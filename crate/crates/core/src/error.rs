use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("unsupported state: {0}")]
    UnsupportedState(String),

    #[error("argument outside the supported domain: {0}")]
    Domain(String),

    #[error(
        "quadrature did not converge: achieved error bound {achieved:e} (requested {requested:e})"
    )]
    NoConvergence { achieved: f64, requested: f64 },

    #[error("insufficient coverage: {0}")]
    Coverage(String),

    #[error("characteristic function does not decay at the grid boundary: |chi| = {magnitude:e} > {tolerance:e}")]
    BoundaryDecay { magnitude: f64, tolerance: f64 },

    #[error("truncation at n_max = {n_max} keeps only {mass} of the probability mass")]
    Truncation { n_max: usize, mass: f64 },

    #[error("grid size {0} is not a power of two")]
    GridSize(usize),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, value: f64, reason: &'static str) -> Error {
    Error::InvalidParameter {
        name,
        value,
        reason,
    }
}
