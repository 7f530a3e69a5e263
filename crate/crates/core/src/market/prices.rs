//! Home prices implied by PDVs and tax bills.

use crate::error::{Error, Result};

/// Stationary price: the fixed point of `p = -tau + p/(1+r) - m`,
/// i.e. `p = ((1+r)/r)(-tau - m)`.
///
/// A steady state requires a strictly positive interest rate; with `r = 0`
/// the recursion has no fixed point unless `tau = -m`.
pub fn steady_state_price(m: f64, tau: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::RateRequired { rate: r });
    }
    Ok((1.0 + r) / r * (-tau - m))
}

/// Element-wise [`steady_state_price`] over a schedule.
pub fn steady_state_prices(m: &[f64], tau: &[f64], r: f64) -> Result<Vec<f64>> {
    if m.len() != tau.len() {
        return Err(Error::InvalidScenario("PDV and tax schedules differ in length".into()));
    }
    m.iter().zip(tau).map(|(&m, &t)| steady_state_price(m, t, r)).collect()
}

/// Purchase price given the current tax, the resale price and the PDV.
pub fn two_period_price(tau1: f64, p2: f64, m: f64, r: f64) -> f64 {
    -tau1 + p2 / (1.0 + r) - m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steady_state_is_the_recursion_fixed_point() {
        let (tau, m, r) = (1.0, -2.0, 0.05);
        let p = steady_state_price(m, tau, r).unwrap();
        assert!((p - 21.0).abs() < 1e-12);
        // Oracle: iterate the recursion to convergence.
        let mut q = 0.0;
        for _ in 0..5000 {
            q = -tau + q / (1.0 + r) - m;
        }
        assert!((p - q).abs() < 1e-9);
    }

    #[test]
    fn tax_increase_lowers_price_by_dividend_factor() {
        let (m, r, eps) = (-2.0, 0.05, 0.01);
        let dp = steady_state_price(m, 1.0 + eps, r).unwrap() - steady_state_price(m, 1.0, r).unwrap();
        assert!((dp + 0.21).abs() < 1e-12);
        assert_eq!(steady_state_price(1.5, -1.5, r).unwrap(), 0.0);
    }

    #[test]
    fn two_period_price_examples() {
        assert_eq!(two_period_price(0.0, 0.0, 0.0, 0.05), 0.0);
        assert!((two_period_price(1.0, 1.05, -2.0, 0.05) - 2.0).abs() < 1e-15);
        let (m, tau, r) = (-1.3, 0.4, 0.07);
        let p = steady_state_price(m, tau, r).unwrap();
        assert!((two_period_price(tau, p, m, r) - p).abs() < 1e-12);
    }

    #[test]
    fn zero_rate_needs_no_steady_state() {
        assert!(matches!(steady_state_price(0.0, 0.0, 0.0), Err(Error::RateRequired { .. })));
    }
}
