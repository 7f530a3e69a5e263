//! Utility primitives and the two-period consumption-savings problem.
//!
//! A buyer facing a payment-price vector `z = (tau, p1, p2)` consumes
//! `w - p1 - tau - b` in the first period and `w + p2 + (1 + r) b` in the
//! second, choosing savings `b` optimally. The resulting money value
//! `V(w, z)` depends on `z` only through its present discounted value, so
//! most of the crate works with `V(w, m)` evaluated at the canonical bundle
//! `(tau = -m, p1 = 0, p2 = 0)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{bisect_increasing, expand_upper};

/// Consumption floor used when evaluating `u` near the boundary.
pub const CONSUMPTION_FLOOR: f64 = 1e-12;

const SAVINGS_TOL: f64 = 1e-12;

/// Period utility of consumption.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
#[derive(Default)]
pub enum UtilitySpec {
    /// `u(c) = ln c`
    #[default]
    Log,
    /// `u(c) = c^(1-gamma) / (1-gamma)`, `gamma > 0`, `gamma != 1`
    Crra { gamma: f64 },
}

impl UtilitySpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            UtilitySpec::Log => Ok(()),
            UtilitySpec::Crra { gamma } if gamma > 0.0 && gamma.is_finite() && gamma != 1.0 => Ok(()),
            UtilitySpec::Crra { gamma } => Err(Error::InvalidScenario(format!(
                "utility.gamma must be positive and different from 1 (got {gamma})"
            ))),
        }
    }

    pub fn u(&self, c: f64) -> f64 {
        let c = c.max(CONSUMPTION_FLOOR);
        match *self {
            UtilitySpec::Log => c.ln(),
            UtilitySpec::Crra { gamma } => c.powf(1.0 - gamma) / (1.0 - gamma),
        }
    }

    /// Marginal utility; `+inf` at zero consumption.
    pub fn du(&self, c: f64) -> f64 {
        if c <= 0.0 {
            return f64::INFINITY;
        }
        match *self {
            UtilitySpec::Log => 1.0 / c,
            UtilitySpec::Crra { gamma } => c.powf(-gamma),
        }
    }

    /// Inverse of marginal utility: the consumption at which `u'(c) = lambda`.
    pub fn du_inverse(&self, lambda: f64) -> f64 {
        match *self {
            UtilitySpec::Log => 1.0 / lambda,
            UtilitySpec::Crra { gamma } => lambda.powf(-1.0 / gamma),
        }
    }

    /// Whether `u(c) -> -inf` as `c -> 0`.
    fn unbounded_below(&self) -> bool {
        match *self {
            UtilitySpec::Log => true,
            UtilitySpec::Crra { gamma } => gamma > 1.0,
        }
    }
}

/// Tax bill, purchase price and resale price attached to a location.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PaymentPriceVector {
    pub tau: f64,
    pub p1: f64,
    pub p2: f64,
}

impl PaymentPriceVector {
    pub fn new(tau: f64, p1: f64, p2: f64) -> Self {
        Self { tau, p1, p2 }
    }

    /// The canonical representative of all bundles with PDV `m`.
    pub fn canonical(m: f64) -> Self {
        Self { tau: -m, p1: 0.0, p2: 0.0 }
    }
}

/// Present discounted value `-p1 - tau + p2 / (1 + r)`.
pub fn pdv(z: PaymentPriceVector, r: f64) -> f64 {
    -z.p1 - z.tau + z.p2 / (1.0 + r)
}

/// Optimal savings and the resulting consumption path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SavingsSolution {
    pub b: f64,
    pub c1: f64,
    pub c2: f64,
    pub value: f64,
}

impl SavingsSolution {
    /// `u'(c1) - (1 + r) u'(c2)`; zero at the optimum.
    pub fn foc_residual(&self, r: f64, u: &UtilitySpec) -> f64 {
        u.du(self.c1) - (1.0 + r) * u.du(self.c2)
    }
}

/// Solves `max_b u(w - p1 - tau - b) + u(w + p2 + (1 + r) b)`.
///
/// The first-order residual is strictly increasing in `b` and diverges at both
/// ends of the feasible interval, so bisection on it always converges.
pub fn solve_savings(w: f64, z: PaymentPriceVector, r: f64, u: &UtilitySpec) -> Result<SavingsSolution> {
    let gross = 1.0 + r;
    let a1 = w - z.p1 - z.tau;
    let a2 = w + z.p2;
    let lifetime_wealth = a1 + a2 / gross;
    if !(lifetime_wealth > 0.0) || !lifetime_wealth.is_finite() {
        return Err(Error::InfeasibleBudget { lifetime_wealth });
    }
    let b_lo = -a2 / gross;
    let b_hi = a1;
    let residual = |b: f64| u.du(a1 - b) - gross * u.du(a2 + gross * b);
    let tol = SAVINGS_TOL * (1.0f64).max(b_hi.abs().max(b_lo.abs()) * 1e-3);
    let b = bisect_increasing(residual, b_lo, b_hi, tol);
    let c1 = a1 - b;
    let c2 = a2 + gross * b;
    if !(c1 > 0.0 && c2 > 0.0) {
        return Err(Error::InfeasibleBudget { lifetime_wealth });
    }
    Ok(SavingsSolution { b, c1, c2, value: u.u(c1) + u.u(c2) })
}

/// `dV/dw = (2 + r) u'(c2)` at the optimal savings choice.
pub fn marginal_value(w: f64, z: PaymentPriceVector, r: f64, u: &UtilitySpec) -> Result<f64> {
    let s = solve_savings(w, z, r, u)?;
    Ok((2.0 + r) * u.du(s.c2))
}

/// Money value `V(w, m)` of a bundle with PDV `m`.
pub fn value_at_pdv(w: f64, m: f64, r: f64, u: &UtilitySpec) -> Result<f64> {
    solve_savings(w, PaymentPriceVector::canonical(m), r, u).map(|s| s.value)
}

/// `dV/dm = u'(c1)`, the marginal value of a better bundle.
pub fn pdv_marginal_value(w: f64, m: f64, r: f64, u: &UtilitySpec) -> Result<f64> {
    solve_savings(w, PaymentPriceVector::canonical(m), r, u).map(|s| u.du(s.c1))
}

/// The smallest PDV leaving type `w` with positive lifetime wealth.
pub fn pdv_lower_bound(w: f64, r: f64) -> f64 {
    -w * (2.0 + r) / (1.0 + r)
}

/// Finds the PDV `m` with `V(w, m) = target`.
pub fn invert_value_in_money(w: f64, target: f64, r: f64, u: &UtilitySpec) -> Result<f64> {
    let unattainable = Error::Unattainable { income: w, target };
    if !target.is_finite() {
        return Err(unattainable);
    }
    let m_min = pdv_lower_bound(w, r);
    if !u.unbounded_below() {
        // V is finite at the boundary; anything below it cannot be reached.
        let floor = 2.0 * u.u(0.0);
        if target <= floor {
            return Err(unattainable);
        }
    }
    let value_gap = |m: f64| match value_at_pdv(w, m, r, u) {
        Ok(v) => v - target,
        Err(_) => f64::NEG_INFINITY,
    };
    let scale = w.abs().max(1.0);
    let hi = expand_upper(value_gap, m_min, scale, 200).ok_or(unattainable)?;
    let tol = 1e-14 * scale.max(hi.abs());
    Ok(bisect_increasing(value_gap, m_min, hi, tol))
}

/// Lifetime wealth `w (2 + r)/(1 + r) + m` of type `w` holding PDV `m`.
pub fn lifetime_wealth(w: f64, m: f64, r: f64) -> f64 {
    w * (2.0 + r) / (1.0 + r) + m
}

impl UtilitySpec {
    /// Share of lifetime wealth consumed in the first period at the optimum.
    ///
    /// For isoelastic utility the Euler equation gives
    /// `c2 = (1 + r)^(1/gamma) c1`, so the split does not depend on wealth.
    pub fn first_period_share(&self, r: f64) -> f64 {
        let gamma = match *self {
            UtilitySpec::Log => 1.0,
            UtilitySpec::Crra { gamma } => gamma,
        };
        1.0 / (1.0 + (1.0 + r).powf(1.0 / gamma - 1.0))
    }

    fn growth_factor(&self, r: f64) -> f64 {
        let gamma = match *self {
            UtilitySpec::Log => 1.0,
            UtilitySpec::Crra { gamma } => gamma,
        };
        (1.0 + r).powf(1.0 / gamma)
    }
}

/// Closed-form evaluation of the savings problem at the canonical bundle.
///
/// Equivalent to [`solve_savings`] for the supported utility families but
/// without the inner root search; the solvers call this in their inner loops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedForm {
    pub r: f64,
    pub utility: UtilitySpec,
    share: f64,
    growth: f64,
}

impl ClosedForm {
    pub fn new(r: f64, utility: UtilitySpec) -> Self {
        Self { r, utility, share: utility.first_period_share(r), growth: utility.growth_factor(r) }
    }

    /// First-period consumption; `None` if lifetime wealth is not positive.
    pub fn c1(&self, w: f64, m: f64) -> Option<f64> {
        let big_w = lifetime_wealth(w, m, self.r);
        (big_w > 0.0 && big_w.is_finite()).then_some(self.share * big_w)
    }

    /// `V(w, m)`.
    pub fn value(&self, w: f64, m: f64) -> Option<f64> {
        self.c1(w, m).map(|c1| self.utility.u(c1) + self.utility.u(self.growth * c1))
    }

    /// `dV/dm = u'(c1)`.
    pub fn pdv_marginal(&self, w: f64, m: f64) -> Option<f64> {
        self.c1(w, m).map(|c1| self.utility.du(c1))
    }

    /// `dV/dw = (2 + r) u'(c2)`.
    pub fn income_marginal(&self, w: f64, m: f64) -> Option<f64> {
        self.c1(w, m).map(|c1| (2.0 + self.r) * self.utility.du(self.growth * c1))
    }

    /// The PDV `m` with `V(w, m) = target`.
    pub fn invert(&self, w: f64, target: f64) -> Result<f64> {
        let unattainable = Error::Unattainable { income: w, target };
        let c1 = match self.utility {
            UtilitySpec::Log => ((target - self.growth.ln()) / 2.0).exp(),
            UtilitySpec::Crra { gamma } => {
                let k = 1.0 + self.growth.powf(1.0 - gamma);
                let base = target * (1.0 - gamma) / k;
                if !(base > 0.0) {
                    return Err(unattainable);
                }
                base.powf(1.0 / (1.0 - gamma))
            }
        };
        if !(c1 > 0.0) || !c1.is_finite() {
            return Err(unattainable);
        }
        Ok(c1 / self.share - w * (2.0 + self.r) / (1.0 + self.r))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LOG: UtilitySpec = UtilitySpec::Log;
    const CRRA2: UtilitySpec = UtilitySpec::Crra { gamma: 2.0 };

    #[test]
    fn pdv_examples() {
        assert_eq!(pdv(PaymentPriceVector::new(1.0, 2.0, 3.0), 0.0), 0.0);
        assert!((pdv(PaymentPriceVector::new(0.0, 0.0, 1.05), 0.05) - 1.0).abs() < 1e-15);
        assert_eq!(pdv(PaymentPriceVector::new(1.0, 2.0, 3.0), 0.5), -1.0);
    }

    #[test]
    fn no_trade_log_smooths_perfectly() {
        let s = solve_savings(10.0, PaymentPriceVector::default(), 0.0, &LOG).unwrap();
        assert!(s.b.abs() < 1e-10);
        assert!((s.c1 - 10.0).abs() < 1e-10 && (s.c2 - 10.0).abs() < 1e-10);
        assert!((s.value - 2.0 * 10f64.ln()).abs() < 1e-10);
        assert!((s.value - 4.605_170_185_988_091).abs() < 1e-9);
    }

    #[test]
    fn zero_pdv_bundle_matches_no_trade() {
        let s = solve_savings(10.0, PaymentPriceVector::new(2.0, 3.0, 5.0), 0.0, &LOG).unwrap();
        assert!((s.b + 5.0).abs() < 1e-10);
        assert!((s.c1 - 10.0).abs() < 1e-10 && (s.c2 - 10.0).abs() < 1e-10);
        assert!((s.value - 2.0 * 10f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn crra_matches_grid_search_over_savings() {
        let z = PaymentPriceVector::new(1.0, 2.0, 0.0);
        let (w, r) = (10.0, 0.05);
        let s = solve_savings(w, z, r, &CRRA2).unwrap();
        // Oracle: brute-force grid over b at step 1e-6 around the feasible set.
        let objective = |b: f64| CRRA2.u(w - z.p1 - z.tau - b) + CRRA2.u(w + z.p2 + (1.0 + r) * b);
        let (mut best_b, mut best_v) = (f64::NAN, f64::NEG_INFINITY);
        let mut b = -4.0;
        while b <= 2.0 {
            let v = objective(b);
            if v > best_v {
                best_v = v;
                best_b = b;
            }
            b += 1e-6;
        }
        assert!((s.b - best_b).abs() < 2e-6, "{} vs {}", s.b, best_b);
        assert!((s.value - best_v).abs() < 1e-11);
        assert!(s.foc_residual(r, &CRRA2).abs() < 1e-10);
    }

    #[test]
    fn infeasible_budget_is_reported() {
        let z = PaymentPriceVector::new(25.0, 0.0, 0.0);
        assert!(matches!(solve_savings(10.0, z, 0.0, &LOG), Err(Error::InfeasibleBudget { .. })));
    }

    #[test]
    fn marginal_value_closed_form_and_zero_pdv_invariance() {
        let v = marginal_value(10.0, PaymentPriceVector::default(), 0.0, &LOG).unwrap();
        assert!((v - 0.2).abs() < 1e-12);
        let v = marginal_value(10.0, PaymentPriceVector::new(4.0, -1.0, 3.0), 0.0, &LOG).unwrap();
        assert!((v - 0.2).abs() < 1e-12);
    }

    #[test]
    fn marginal_value_matches_finite_difference() {
        let (z, r, h) = (PaymentPriceVector::new(1.0, 2.0, 0.0), 0.05, 1e-5);
        let v = |w: f64| solve_savings(w, z, r, &CRRA2).unwrap().value;
        let fd = (v(10.0 + h) - v(10.0 - h)) / (2.0 * h);
        let mv = marginal_value(10.0, z, r, &CRRA2).unwrap();
        assert!(((mv - fd) / fd).abs() < 1e-6, "{mv} vs {fd}");
    }

    #[test]
    fn inversion_examples() {
        let m = invert_value_in_money(10.0, 2.0 * 10f64.ln(), 0.0, &LOG).unwrap();
        assert!(m.abs() < 1e-10);
        let target = value_at_pdv(10.0, 3.0, 0.0, &LOG).unwrap();
        assert!((invert_value_in_money(10.0, target, 0.0, &LOG).unwrap() - 3.0).abs() < 1e-10);
        let target = value_at_pdv(7.0, 1.25, 0.05, &CRRA2).unwrap();
        assert!((invert_value_in_money(7.0, target, 0.05, &CRRA2).unwrap() - 1.25).abs() < 1e-8);
    }

    #[test]
    fn inversion_below_boundary_is_unattainable() {
        let u = UtilitySpec::Crra { gamma: 0.5 };
        assert!(matches!(invert_value_in_money(1.0, -1.0, 0.05, &u), Err(Error::Unattainable { .. })));
    }

    #[test]
    fn invalid_gamma_rejected() {
        assert!(UtilitySpec::Crra { gamma: 1.0 }.validate().is_err());
        assert!(UtilitySpec::Crra { gamma: -2.0 }.validate().is_err());
        assert!(CRRA2.validate().is_ok());
    }
    #[test]
    fn closed_form_agrees_with_bisection_solver() {
        for u in [LOG, CRRA2, UtilitySpec::Crra { gamma: 0.5 }] {
            for &(w, m, r) in &[(10.0, 0.0, 0.0), (2.0, -1.3, 0.05), (3.5, 0.7, 0.3), (0.4, 0.2, 0.1)] {
                let cf = ClosedForm::new(r, u);
                let s = solve_savings(w, PaymentPriceVector::canonical(m), r, &u).unwrap();
                assert!((cf.c1(w, m).unwrap() - s.c1).abs() < 1e-10 * s.c1.max(1.0));
                assert!((cf.value(w, m).unwrap() - s.value).abs() < 1e-10 * s.value.abs().max(1.0));
                let mv = marginal_value(w, PaymentPriceVector::canonical(m), r, &u).unwrap();
                assert!((cf.income_marginal(w, m).unwrap() - mv).abs() < 1e-9 * mv);
                let back = cf.invert(w, s.value).unwrap();
                assert!((back - m).abs() < 1e-9, "{u:?} {w} {m} {r}: {back}");
            }
        }
    }
}
