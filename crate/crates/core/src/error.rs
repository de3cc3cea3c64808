use thiserror::Error;

use crate::quadrature::QuadratureError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("argument outside [0,1]: t = {t}, u = {u}")]
    OutOfDomain { t: f64, u: f64 },

    #[error("kernel not strictly positive: K({t}, {u}) = {value}")]
    NonPositiveKernel { t: f64, u: f64, value: f64 },

    #[error("function not strictly positive: f({t}) = {value}")]
    NonPositiveFunction { t: f64, value: f64 },

    #[error("coefficient {entry}: {source}")]
    Coefficient {
        entry: &'static str,
        #[source]
        source: QuadratureError,
    },

    #[error(transparent)]
    Quadrature(#[from] QuadratureError),

    #[error("root isolation failed: {0}")]
    RootIsolation(String),

    #[error("unsupported case: {0}")]
    Unsupported(String),

    #[error("fixed-point residual {residual:e} exceeds gate {gate:e} at xi = {xi}")]
    ResidualGate { xi: f64, residual: f64, gate: f64 },

    #[error("enumeration budget exceeded: {terms:e} weighted terms > {limit:e}")]
    BudgetExceeded { terms: f64, limit: f64 },

    #[error("internal error: {0}")]
    Internal(String),
}
