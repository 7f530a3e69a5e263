use thiserror::Error;

/// Errors raised by the economic solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("no savings choice gives positive consumption in both periods (lifetime wealth {lifetime_wealth})")]
    InfeasibleBudget { lifetime_wealth: f64 },

    #[error("money value {target} is not attainable for type {income}")]
    Unattainable { income: f64, target: f64 },

    #[error("housing mass {housing} does not match population mass {population}")]
    MassMismatch { housing: f64, population: f64 },

    #[error("money-value integration failed at type {income}: {reason}")]
    OdeStepFailure { income: f64, reason: String },

    #[error("district {district} cannot raise revenue {revenue} with positive owner consumption")]
    RevenueInfeasible { district: usize, revenue: f64 },

    #[error("steady-state prices need a strictly positive interest rate (got {rate})")]
    RateRequired { rate: f64 },

    #[error("best-response iteration did not converge after {iterations} iterations (residual {residual})")]
    NoConvergence { iterations: usize, residual: f64, trace: Vec<Vec<f64>> },

    #[error("no cap reduction improves every district")]
    NoImprovingCap,

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

pub type Result<T> = std::result::Result<T, Error>;
