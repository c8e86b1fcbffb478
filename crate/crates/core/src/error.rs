use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("Gauss-Hermite node solver did not converge for node {index} (residual {residual:e})")]
    QuadratureNoConvergence { index: usize, residual: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "CFL number {cfl} exceeds 1: max|v| dt <= dx is required for stability \
         (use the unchecked entry point to run unstable configurations on purpose)"
    )]
    CflViolation { cfl: f64 },

    #[error("density became non-positive at index {index} (rho = {value:e}) at t = {t}")]
    NonPositiveDensity { index: usize, value: f64, t: f64 },

    #[error("vanishing denominator in the naive g update at index {index} (value {value:e}) at t = {t}")]
    VanishingDenominator { index: usize, value: f64, t: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),
}
