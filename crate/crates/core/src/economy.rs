//! Scenario description: districts, population, preferences and technology.

use serde::{Deserialize, Serialize};

use crate::distribution::Distribution;
use crate::econ::UtilitySpec;
use crate::error::{Error, Result};

/// School-quality technology `s(e)`; increasing, concave, `s'(e) -> 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SchoolTech {
    /// `alpha * ln(1 + e)`
    Log { alpha: f64 },
    /// `alpha * e^beta`, `beta` in `(0, 1)`
    Power { alpha: f64, beta: f64 },
}

impl SchoolTech {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SchoolTech::Log { alpha } if alpha > 0.0 && alpha.is_finite() => Ok(()),
            SchoolTech::Power { alpha, beta } if alpha > 0.0 && alpha.is_finite() && beta > 0.0 && beta < 1.0 => Ok(()),
            other => {
                Err(Error::InvalidScenario(format!("school technology needs alpha > 0 (and beta in (0,1)): {other:?}")))
            }
        }
    }

    pub fn level(&self, e: f64) -> f64 {
        let e = e.max(0.0);
        match *self {
            SchoolTech::Log { alpha } => alpha * e.ln_1p(),
            SchoolTech::Power { alpha, beta } => alpha * e.powf(beta),
        }
    }

    pub fn marginal(&self, e: f64) -> f64 {
        let e = e.max(0.0);
        match *self {
            SchoolTech::Log { alpha } => alpha / (1.0 + e),
            SchoolTech::Power { alpha, beta } => {
                if e == 0.0 {
                    f64::INFINITY
                } else {
                    alpha * beta * e.powf(beta - 1.0)
                }
            }
        }
    }

    /// Expenditure with `s'(e) = target` (zero if `s'(0) <= target`).
    pub fn inverse_marginal(&self, target: f64) -> f64 {
        match *self {
            SchoolTech::Log { alpha } => (alpha / target - 1.0).max(0.0),
            SchoolTech::Power { alpha, beta } => (target / (alpha * beta)).powf(1.0 / (beta - 1.0)),
        }
    }

    /// Expenditure reaching school level `s` (inverse of [`SchoolTech::level`]).
    pub fn inverse_level(&self, s: f64) -> f64 {
        let s = s.max(0.0);
        match *self {
            SchoolTech::Log { alpha } => (s / alpha).exp_m1(),
            SchoolTech::Power { alpha, beta } => (s / alpha).powf(1.0 / beta),
        }
    }
}

/// Wealth of the incumbent resident of a home at quality `q`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OldWealth {
    /// Income of the type the reference equilibrium assigns to the home.
    #[default]
    Assigned,
    Constant {
        value: f64,
    },
    /// `intercept + slope * q`
    Linear {
        intercept: f64,
        slope: f64,
    },
}

/// Fraction of homes at quality `q` that are rented.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum RenterShare {
    Constant(f64),
    /// Linear in the home's quantile within the district, from `at_low` at the
    /// worst home to `at_high` at the best.
    Linear {
        at_low: f64,
        at_high: f64,
    },
}

impl Default for RenterShare {
    fn default() -> Self {
        RenterShare::Constant(0.0)
    }
}

impl RenterShare {
    /// Share at quantile `p` of the district's housing distribution.
    pub fn at_quantile(&self, p: f64) -> f64 {
        match *self {
            RenterShare::Constant(s) => s,
            RenterShare::Linear { at_low, at_high } => at_low + (at_high - at_low) * p.clamp(0.0, 1.0),
        }
    }

    fn validate(&self, id: &str) -> Result<()> {
        let ok = |s: f64| (0.0..=1.0).contains(&s);
        let valid = match *self {
            RenterShare::Constant(s) => ok(s),
            RenterShare::Linear { at_low, at_high } => ok(at_low) && ok(at_high),
        };
        if valid {
            Ok(())
        } else {
            Err(Error::InvalidScenario(format!("district {id}: renter_share must lie in [0, 1]")))
        }
    }
}

/// Value guaranteed to the poorest arrival by the outside option.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OutsideOption {
    /// The money value `M(w_min)` itself.
    MoneyValue { value: f64 },
    /// The PDV of the bundle available to the poorest type.
    Pdv { value: f64 },
}

impl Default for OutsideOption {
    fn default() -> Self {
        OutsideOption::Pdv { value: 0.0 }
    }
}

fn one() -> f64 {
    1.0
}

/// A jurisdiction with its housing stock, incumbents and school.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct District {
    pub id: String,
    /// Normalised house-quality distribution on `[0, 1]`.
    pub housing: Distribution,
    /// Housing mass; defaults to `1/N`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(default)]
    pub old_wealth: OldWealth,
    #[serde(default)]
    pub renter_share: RenterShare,
    /// Multiplier on the common school technology.
    #[serde(default = "one")]
    pub s_scale: f64,
}

impl District {
    pub fn new(id: impl Into<String>, housing: Distribution) -> Self {
        Self {
            id: id.into(),
            housing,
            mass: None,
            old_wealth: OldWealth::Assigned,
            renter_share: RenterShare::default(),
            s_scale: 1.0,
        }
    }

    pub fn with_renter_share(mut self, share: RenterShare) -> Self {
        self.renter_share = share;
        self
    }

    pub fn with_old_wealth(mut self, w: OldWealth) -> Self {
        self.old_wealth = w;
        self
    }

    pub fn with_s_scale(mut self, scale: f64) -> Self {
        self.s_scale = scale;
        self
    }
}

/// A complete scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Economy {
    pub districts: Vec<District>,
    /// Income distribution of each arriving cohort (unit mass).
    pub income: Distribution,
    #[serde(default)]
    pub utility: UtilitySpec,
    pub rate: f64,
    pub school: SchoolTech,
    /// Weight on school quality in district objectives.
    pub theta: f64,
    #[serde(default)]
    pub outside_option: OutsideOption,
    /// Expenditure profile describing the steady state the economy starts in;
    /// defaults to zero spending everywhere.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_expenditure: Option<Vec<f64>>,
}

impl Economy {
    pub fn n(&self) -> usize {
        self.districts.len()
    }

    pub fn district_mass(&self, j: usize) -> f64 {
        self.districts[j].mass.unwrap_or(1.0 / self.n() as f64)
    }

    /// School level `s_j(e)` of district `j`.
    pub fn school_level(&self, j: usize, e: f64) -> f64 {
        self.districts[j].s_scale * self.school.level(e)
    }

    pub fn school_marginal(&self, j: usize, e: f64) -> f64 {
        self.districts[j].s_scale * self.school.marginal(e)
    }

    pub fn school_levels(&self, e: &[f64]) -> Vec<f64> {
        e.iter().enumerate().map(|(j, &x)| self.school_level(j, x)).collect()
    }

    /// Expenditure at which district `j` reaches school level `s`.
    pub fn expenditure_for_level(&self, j: usize, s: f64) -> f64 {
        self.school.inverse_level(s / self.districts[j].s_scale)
    }

    pub fn reference_profile(&self) -> Vec<f64> {
        self.reference_expenditure.clone().unwrap_or_else(|| vec![0.0; self.n()])
    }

    pub fn income_lo(&self) -> f64 {
        self.income.lo()
    }

    /// All districts fully owner-occupied.
    pub fn all_owners(&self) -> bool {
        self.districts.iter().all(|d| matches!(d.renter_share, RenterShare::Constant(s) if s == 0.0))
    }

    /// Checks every scenario-level invariant.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidScenario(msg));
        if self.districts.is_empty() {
            return bad("at least one district is required".into());
        }
        if !(self.rate >= 0.0) || !self.rate.is_finite() {
            return bad(format!("rate must be nonnegative (got {})", self.rate));
        }
        if !(self.theta >= 0.0) || !self.theta.is_finite() {
            return bad(format!("theta must be nonnegative (got {})", self.theta));
        }
        self.utility.validate()?;
        self.school.validate()?;
        if self.income.is_atom() {
            return bad("income distribution must be continuous".into());
        }
        if self.income.lo() < 0.0 {
            return bad("incomes must be nonnegative".into());
        }
        let mut ids = std::collections::BTreeSet::new();
        for (j, d) in self.districts.iter().enumerate() {
            if !ids.insert(d.id.as_str()) {
                return bad(format!("duplicate district id {}", d.id));
            }
            if d.housing.lo() < 0.0 || d.housing.hi() > 1.0 {
                return bad(format!("district {}: house qualities must lie in [0, 1]", d.id));
            }
            if !(d.s_scale > 0.0) || !d.s_scale.is_finite() {
                return bad(format!("district {}: s_scale must be positive", d.id));
            }
            if !(self.district_mass(j) > 0.0) {
                return bad(format!("district {}: housing mass must be positive", d.id));
            }
            d.renter_share.validate(&d.id)?;
            match d.old_wealth {
                OldWealth::Constant { value } if !value.is_finite() => {
                    return bad(format!("district {}: old_wealth must be finite", d.id))
                }
                OldWealth::Linear { intercept, slope } if !intercept.is_finite() || !slope.is_finite() => {
                    return bad(format!("district {}: old_wealth must be finite", d.id))
                }
                _ => {}
            }
        }
        if let Some(e) = &self.reference_expenditure {
            if e.len() != self.n() || e.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
                return bad("reference_expenditure needs one nonnegative entry per district".into());
            }
        }
        let (OutsideOption::MoneyValue { value } | OutsideOption::Pdv { value }) = self.outside_option;
        if !value.is_finite() {
            return bad("outside_option value must be finite".into());
        }
        let housing: f64 = (0..self.n()).map(|j| self.district_mass(j)).sum();
        if (housing - 1.0).abs() > 1e-12 {
            return Err(Error::MassMismatch { housing, population: 1.0 });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::DistributionSpec;

    #[test]
    fn school_tech_inverses() {
        for tech in [SchoolTech::Log { alpha: 0.5 }, SchoolTech::Power { alpha: 0.4, beta: 0.5 }] {
            for &e in &[0.1, 1.0, 3.0] {
                assert!((tech.inverse_level(tech.level(e)) - e).abs() < 1e-12);
                assert!((tech.inverse_marginal(tech.marginal(e)) - e).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn distribution_round_trips_through_spec() {
        let d = Distribution::uniform(0.0, 1.0);
        let back: Distribution = DistributionSpec::from(d.clone()).try_into().unwrap();
        assert_eq!(d, back);
    }
}
