//! District objectives, optimal tax schedules and the expenditure game.
//!
//! The game is solved in steady state. The economy starts from a reference
//! equilibrium (by default zero spending everywhere) which fixes incumbents'
//! wealth, next period's policy and resale prices. In the current period a
//! district chooses its spending `e_j`; the housing market re-sorts the
//! arriving cohort, which moves the PDVs of its homes and hence the prices
//! incumbents sell at. Taxes are then set to raise the required revenue with
//! equal marginal utility across owners.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::econ::CONSUMPTION_FLOOR;
use crate::economy::{Economy, OldWealth};
use crate::error::{Error, Result};
use crate::market::{assign_by_school_levels, money_values_with_steps, two_period_price, MoneyValueSolution};
use crate::numerics::{golden_section_max, multistart_golden_max, GAUSS_LEGENDRE_8};
use crate::policy::FeePolicy;

/// Numerical settings for the market and game solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    /// Fixed integration steps per assignment segment.
    pub ode_steps: usize,
    /// Bracket width at which best-response searches stop.
    pub br_tolerance: f64,
    /// Number of sub-brackets in the multi-start best-response search.
    pub br_starts: usize,
    /// Maximum `|BR(e) - e|` accepted as an equilibrium.
    pub nash_tolerance: f64,
    pub max_iterations: usize,
    /// Weight on the best response in the damped iteration.
    pub damping: f64,
    /// `e_max` solves `theta s'(e_max) = ratio * u'(c_max)`.
    pub e_max_ratio: f64,
    /// Starting profile for the iteration (defaults to the reference profile).
    pub initial_profile: Option<Vec<f64>>,
    /// Also iterate from extreme starting profiles and flag distinct fixed points.
    pub multistart: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            ode_steps: crate::market::DEFAULT_ODE_STEPS,
            br_tolerance: 1e-10,
            br_starts: 3,
            nash_tolerance: 1e-6,
            max_iterations: 500,
            damping: 0.5,
            e_max_ratio: 1e-4,
            initial_profile: None,
            multistart: false,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidScenario(format!("solver: {m}")));
        if self.ode_steps == 0 {
            return bad("ode_steps must be positive");
        }
        if !(self.br_tolerance > 0.0) || !(self.nash_tolerance > 0.0) {
            return bad("tolerances must be positive");
        }
        if self.br_starts == 0 || self.max_iterations == 0 {
            return bad("br_starts and max_iterations must be positive");
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return bad("damping must lie in (0, 1]");
        }
        if !(self.e_max_ratio > 0.0) {
            return bad("e_max_ratio must be positive");
        }
        Ok(())
    }
}

/// A district's tax schedule on its quadrature grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TaxSchedule {
    pub district: usize,
    /// Quantiles of the district's housing distribution.
    pub quantiles: Vec<f64>,
    pub qualities: Vec<f64>,
    /// Housing mass represented by each grid point (sums to the district mass).
    pub weights: Vec<f64>,
    pub tau: Vec<f64>,
    pub revenue: f64,
    /// Common post-tax owner wealth `w~ + p` (absent without owners).
    pub post_tax_wealth: Option<f64>,
}

impl TaxSchedule {
    /// `sum tau dQ`.
    pub fn collected(&self) -> f64 {
        self.tau.iter().zip(&self.weights).map(|(t, w)| t * w).sum()
    }
}

/// Components of a district's objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistrictObjectiveValue {
    pub school_term: f64,
    pub owner_welfare: f64,
    pub renter_welfare: f64,
    pub total: f64,
}

/// Outcome of the expenditure game.
#[derive(Debug, Clone, PartialEq)]
pub struct GameSolution {
    pub e_star: Vec<f64>,
    pub tax_star: Vec<TaxSchedule>,
    pub objectives: Vec<DistrictObjectiveValue>,
    pub br_residual: f64,
    pub iterations: usize,
    /// Profiles visited by the damped iteration.
    pub trace: Vec<Vec<f64>>,
    /// Multi-start iteration reached fixed points further apart than the tolerance.
    pub multiple_equilibria: bool,
}

/// Everything evaluated at one quadrature node of a district.
#[derive(Debug, Clone, Copy)]
struct Node {
    quantile: f64,
    quality: f64,
    weight: f64,
    /// Incumbent wealth.
    old_wealth: f64,
    renter_share: f64,
    /// Current PDV.
    m: f64,
    /// Reference PDV.
    m_ref: f64,
    /// Reference tax bill.
    tau_ref: f64,
}

/// The steady state the economy starts in.
#[derive(Debug, Clone)]
struct Reference {
    profile: Vec<f64>,
    mvs: MoneyValueSolution,
    /// Highest pre-tax owner wealth per district at the reference profile.
    wealth_max: Vec<f64>,
    /// Total pre-tax owner wealth per district at the reference profile.
    wealth_total: Vec<f64>,
}

/// Restrictions on districts' strategy spaces.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Constraints {
    pub lower: Vec<Option<f64>>,
    pub upper: Vec<Option<f64>>,
    /// Districts whose spending is held at a given level.
    pub fixed: Vec<Option<f64>>,
}

impl Constraints {
    pub fn none(n: usize) -> Self {
        Self { lower: vec![None; n], upper: vec![None; n], fixed: vec![None; n] }
    }
}

/// The district game for one economy.
#[derive(Debug, Clone)]
pub struct Game<'a> {
    econ: &'a Economy,
    settings: SolverSettings,
    reference: Reference,
    constraints: Constraints,
    fee: Option<FeePolicy>,
}

impl<'a> Game<'a> {
    pub fn new(econ: &'a Economy, settings: SolverSettings) -> Result<Self> {
        econ.validate()?;
        settings.validate()?;
        if !(econ.rate > 0.0) {
            return Err(Error::RateRequired { rate: econ.rate });
        }
        let profile = econ.reference_profile();
        let alloc = assign_by_school_levels(econ, &econ.school_levels(&profile))?;
        let mvs = money_values_with_steps(econ, &alloc, settings.ode_steps)?;
        let mut game = Self {
            econ,
            settings,
            reference: Reference { profile, mvs: mvs.clone(), wealth_max: vec![], wealth_total: vec![] },
            constraints: Constraints::none(econ.n()),
            fee: None,
        };
        for j in 0..econ.n() {
            let nodes = game.nodes(j, &mvs);
            let wealth: Vec<f64> = nodes.iter().map(|n| game.pre_tax_wealth(n)).collect();
            game.reference.wealth_max.push(wealth.iter().copied().fold(f64::NEG_INFINITY, f64::max));
            game.reference.wealth_total.push(nodes.iter().zip(&wealth).map(|(n, w)| n.weight * w).sum());
        }
        Ok(game)
    }

    pub fn economy(&self) -> &Economy {
        self.econ
    }

    pub fn settings(&self) -> &SolverSettings {
        &self.settings
    }

    pub fn reference_profile(&self) -> &[f64] {
        &self.reference.profile
    }

    pub fn with_constraints(mut self, constraints: Constraints) -> Self {
        self.constraints = constraints;
        self
    }

    pub fn with_fee(mut self, fee: Option<FeePolicy>) -> Self {
        self.fee = fee;
        self
    }

    pub fn constraints(&self) -> &Constraints {
        &self.constraints
    }

    /// Money values for a spending profile.
    pub fn money_values(&self, e: &[f64]) -> Result<MoneyValueSolution> {
        self.money_values_for_levels(&self.econ.school_levels(e))
    }

    fn money_values_for_levels(&self, school: &[f64]) -> Result<MoneyValueSolution> {
        let alloc = assign_by_school_levels(self.econ, school)?;
        money_values_with_steps(self.econ, &alloc, self.settings.ode_steps)
    }

    /// Quadrature grid over district `j`'s homes.
    fn nodes(&self, j: usize, mvs: &MoneyValueSolution) -> Vec<Node> {
        let econ = self.econ;
        let district = &econ.districts[j];
        let mass = econ.district_mass(j);
        let reference = &self.reference.mvs;
        let mut breaks = mvs.allocation().quantile_breaks(j);
        breaks.extend(reference.allocation().quantile_breaks(j));
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        let tau_ref = econ.reference_profile()[j] / mass;
        let mut nodes = Vec::with_capacity(8 * breaks.len());
        for w in breaks.windows(2) {
            let (a, b) = (w[0], w[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for &(x, wt) in &GAUSS_LEGENDRE_8 {
                let p = mid + half * x;
                let quality = district.housing.quantile(p);
                let old_wealth = match district.old_wealth {
                    OldWealth::Assigned => reference.allocation().type_at_quantile(j, p),
                    OldWealth::Constant { value } => value,
                    OldWealth::Linear { intercept, slope } => intercept + slope * quality,
                };
                nodes.push(Node {
                    quantile: p,
                    quality,
                    weight: mass * wt * half,
                    old_wealth,
                    renter_share: district.renter_share.at_quantile(p),
                    m: mvs.pdv_at_quantile(j, p),
                    m_ref: reference.pdv_at_quantile(j, p),
                    tau_ref,
                });
            }
        }
        nodes
    }

    /// Steady-state resale price at a node.
    fn resale_price(&self, n: &Node) -> f64 {
        let r = self.econ.rate;
        (1.0 + r) / r * (-n.tau_ref - n.m_ref)
    }

    /// Owner wealth `w~ + p` before the current tax.
    fn pre_tax_wealth(&self, n: &Node) -> f64 {
        n.old_wealth + two_period_price(0.0, self.resale_price(n), n.m, self.econ.rate)
    }

    /// Equal-marginal-utility schedule raising `revenue` on the given grid.
    fn tax_schedule(&self, j: usize, nodes: &[Node], revenue: f64) -> Result<TaxSchedule> {
        let mass: f64 = nodes.iter().map(|n| n.weight).sum();
        let owners: f64 = nodes.iter().map(|n| n.weight * (1.0 - n.renter_share)).sum();
        let (tau, post_tax_wealth) = if owners > 0.0 {
            // u'(w~ + p) equal across homes means w~ + p = C everywhere; the
            // revenue constraint then pins C down directly.
            let wealth: Vec<f64> = nodes.iter().map(|n| self.pre_tax_wealth(n)).collect();
            let total: f64 = nodes.iter().zip(&wealth).map(|(n, w)| n.weight * w).sum();
            let c = (total - revenue) / mass;
            if !(c > CONSUMPTION_FLOOR) {
                return Err(Error::RevenueInfeasible { district: j, revenue });
            }
            (wealth.iter().map(|w| w - c).collect(), Some(c))
        } else {
            (vec![revenue / mass; nodes.len()], None)
        };
        Ok(TaxSchedule {
            district: j,
            quantiles: nodes.iter().map(|n| n.quantile).collect(),
            qualities: nodes.iter().map(|n| n.quality).collect(),
            weights: nodes.iter().map(|n| n.weight).collect(),
            tau,
            revenue,
            post_tax_wealth,
        })
    }

    /// Revenue district `j` must raise to spend `e[j]` under the fee policy.
    pub fn required_revenue(&self, j: usize, e: &[f64]) -> f64 {
        match &self.fee {
            None => e[j],
            Some(fee) => e[j] + fee.fee(j, e[j]) - fee.transfer(j, e),
        }
    }

    fn evaluate(&self, j: usize, e: &[f64], mvs: &MoneyValueSolution) -> Result<(DistrictObjectiveValue, TaxSchedule)> {
        let econ = self.econ;
        let nodes = self.nodes(j, mvs);
        let schedule = self.tax_schedule(j, &nodes, self.required_revenue(j, e))?;
        let u = &econ.utility;
        let school_term = econ.theta * (econ.school_level(j, e[j]) + econ.school_level(j, self.reference.profile[j]));
        let r = econ.rate;
        let mut owner_welfare = 0.0;
        let mut renter_welfare = 0.0;
        for (n, tau) in nodes.iter().zip(&schedule.tau) {
            if n.renter_share < 1.0 {
                let c = n.old_wealth + two_period_price(*tau, self.resale_price(n), n.m, r);
                owner_welfare += n.weight * (1.0 - n.renter_share) * u.u(c);
            }
            if n.renter_share > 0.0 {
                // Rent plus tax this period is -m + m_ref/(2+r): next period's
                // stationary rent is fixed, so renters bear the PDV change only.
                let c = n.old_wealth + n.m - n.m_ref / (2.0 + r);
                renter_welfare += n.weight * n.renter_share * u.u(c);
            }
        }
        let value = DistrictObjectiveValue {
            school_term,
            owner_welfare,
            renter_welfare,
            total: school_term + owner_welfare + renter_welfare,
        };
        Ok((value, schedule))
    }

    /// Objective of district `j` at profile `e`.
    pub fn objective(&self, j: usize, e: &[f64]) -> Result<DistrictObjectiveValue> {
        let mvs = self.money_values(e)?;
        self.evaluate(j, e, &mvs).map(|v| v.0)
    }

    /// Optimal tax schedule of district `j` at profile `e`.
    pub fn tax_schedule_at(&self, j: usize, e: &[f64]) -> Result<TaxSchedule> {
        let mvs = self.money_values(e)?;
        self.evaluate(j, e, &mvs).map(|v| v.1)
    }

    /// Objectives and schedules of every district at profile `e`.
    pub fn outcomes(&self, e: &[f64]) -> Result<(Vec<DistrictObjectiveValue>, Vec<TaxSchedule>)> {
        let mvs = self.money_values(e)?;
        let mut values = Vec::with_capacity(e.len());
        let mut taxes = Vec::with_capacity(e.len());
        for j in 0..e.len() {
            let (v, t) = self.evaluate(j, e, &mvs)?;
            values.push(v);
            taxes.push(t);
        }
        Ok((values, taxes))
    }

    /// Upper end of the search region: where `theta s'` becomes negligible.
    pub fn e_max(&self, j: usize) -> f64 {
        let econ = self.econ;
        let scale = econ.theta * econ.districts[j].s_scale;
        let c_max = self.reference.wealth_max[j].max(CONSUMPTION_FLOOR);
        let fallback = 2.0 * self.reference.wealth_total[j].abs() + 1.0;
        if scale > 0.0 {
            econ.school.inverse_marginal(self.settings.e_max_ratio * econ.utility.du(c_max) / scale)
        } else {
            fallback
        }
    }

    /// Search interval for district `j`, with the upper end pulled in to
    /// where the objective is still defined.
    fn search_interval<F: FnMut(f64) -> f64>(&self, j: usize, f: &mut F) -> (f64, f64) {
        let lo = self.constraints.lower[j].unwrap_or(0.0).max(0.0);
        let mut hi = self.e_max(j);
        if let Some(cap) = self.constraints.upper[j] {
            hi = hi.min(cap);
        }
        if hi <= lo {
            return (lo, lo);
        }
        if !f(hi).is_finite() {
            if !f(lo).is_finite() {
                return (lo, lo);
            }
            let (mut a, mut b) = (lo, hi);
            for _ in 0..80 {
                let mid = 0.5 * (a + b);
                if f(mid).is_finite() {
                    a = mid;
                } else {
                    b = mid;
                }
                if b - a <= 1e-13 * b.abs().max(1.0) {
                    break;
                }
            }
            hi = a;
        }
        (lo, hi)
    }

    fn maximise<F: FnMut(f64) -> f64>(&self, j: usize, mut f: F) -> f64 {
        let (lo, hi) = self.search_interval(j, &mut f);
        if hi <= lo {
            return lo;
        }
        let tol = self.settings.br_tolerance * hi.max(1.0);
        multistart_golden_max(&mut f, lo, hi, self.settings.br_starts, tol).x
    }

    /// Best response of district `j` to the other entries of `e`.
    pub fn best_response(&self, j: usize, e: &[f64]) -> f64 {
        if let Some(x) = self.constraints.fixed[j] {
            return x;
        }
        let mut profile = e.to_vec();
        self.maximise(j, |x| {
            profile[j] = x;
            self.objective(j, &profile).map(|v| v.total).unwrap_or(f64::NEG_INFINITY)
        })
    }

    /// Fixed-gap optimum of district `j`: school-quality gaps to the districts
    /// in `z` are held at their values under `e_star`, other districts keep
    /// their spending. When `z` holds every other district, PDVs are simply
    /// frozen at their `e_star` values.
    pub fn fixed_gap_best_response(&self, j: usize, z: &[usize], e_star: &[f64]) -> Result<f64> {
        let econ = self.econ;
        let others_in_z = (0..econ.n()).filter(|&k| k != j).all(|k| z.contains(&k));
        let s_star = econ.school_levels(e_star);
        let frozen = if others_in_z { Some(self.money_values(e_star)?) } else { None };
        let mut profile = e_star.to_vec();
        Ok(self.maximise(j, |x| {
            profile[j] = x;
            let shift = econ.school_level(j, x) - s_star[j];
            let result = match &frozen {
                Some(mvs) => self.evaluate(j, &profile, mvs),
                None => {
                    let mut school = s_star.clone();
                    for (k, s) in school.iter_mut().enumerate() {
                        if k == j || z.contains(&k) {
                            *s += shift;
                        }
                    }
                    self.money_values_for_levels(&school).and_then(|mvs| self.evaluate(j, &profile, &mvs))
                }
            };
            result.map(|v| v.0.total).unwrap_or(f64::NEG_INFINITY)
        }))
    }

    /// Fixed-gap objective value of district `j` at own spending `x`, with
    /// PDVs frozen at `e_star`.
    pub fn frozen_objective(&self, j: usize, x: f64, e_star: &[f64]) -> Result<DistrictObjectiveValue> {
        let mvs = self.money_values(e_star)?;
        let mut profile = e_star.to_vec();
        profile[j] = x;
        self.evaluate(j, &profile, &mvs).map(|v| v.0)
    }

    fn best_responses(&self, e: &[f64]) -> Vec<f64> {
        (0..e.len()).into_par_iter().map(|j| self.best_response(j, e)).collect()
    }

    /// Returns the final profile, last step size, iteration count and trace.
    fn iterate_from(&self, start: Vec<f64>) -> Result<(Vec<f64>, f64, usize, Vec<Vec<f64>>)> {
        let lambda = self.settings.damping;
        let mut e = start;
        for (j, x) in e.iter_mut().enumerate() {
            if let Some(f) = self.constraints.fixed[j] {
                *x = f;
            }
        }
        let mut trace = vec![e.clone()];
        let mut residual = f64::INFINITY;
        for it in 1..=self.settings.max_iterations {
            let br = self.best_responses(&e);
            residual = br.iter().zip(&e).map(|(b, x)| (b - x).abs()).fold(0.0, f64::max);
            if residual <= self.settings.nash_tolerance {
                return Ok((e, residual, it, trace));
            }
            for (x, b) in e.iter_mut().zip(&br) {
                *x = (1.0 - lambda) * *x + lambda * b;
            }
            trace.push(e.clone());
        }
        Err(Error::NoConvergence { iterations: self.settings.max_iterations, residual, trace })
    }

    /// Damped best-response iteration to a Nash equilibrium in spending.
    pub fn nash_equilibrium(&self) -> Result<GameSolution> {
        let start = self.settings.initial_profile.clone().unwrap_or_else(|| self.reference.profile.clone());
        if start.len() != self.econ.n() {
            return Err(Error::InvalidScenario("initial_profile needs one entry per district".into()));
        }
        let (e, residual, iterations, trace) = self.iterate_from(start)?;
        let mut multiple = false;
        if self.settings.multistart {
            let n = self.econ.n();
            let starts = [vec![0.0; n], (0..n).map(|j| self.e_max(j).min(self.upper_hint(j))).collect()];
            for s in starts {
                if let Ok((other, ..)) = self.iterate_from(s) {
                    let gap = other.iter().zip(&e).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    multiple |= gap > 10.0 * self.settings.nash_tolerance;
                }
            }
        }
        let (objectives, tax_star) = self.outcomes(&e)?;
        Ok(GameSolution {
            e_star: e,
            tax_star,
            objectives,
            br_residual: residual,
            iterations,
            trace,
            multiple_equilibria: multiple,
        })
    }

    fn upper_hint(&self, j: usize) -> f64 {
        self.constraints.upper[j].unwrap_or(self.reference.wealth_total[j].abs())
    }

    /// Evaluates a given profile as a game outcome (no iteration).
    pub fn solution_at(&self, e: &[f64]) -> Result<GameSolution> {
        let (objectives, tax_star) = self.outcomes(e)?;
        let br = self.best_responses(e);
        let residual = br.iter().zip(e).map(|(b, x)| (b - x).abs()).fold(0.0, f64::max);
        Ok(GameSolution {
            e_star: e.to_vec(),
            tax_star,
            objectives,
            br_residual: residual,
            iterations: 0,
            trace: vec![e.to_vec()],
            multiple_equilibria: false,
        })
    }

    /// Maximises district `j`'s objective on `[lo, hi]` with the other entries
    /// of `e` fixed, by a single golden-section search.
    pub fn maximise_on(&self, j: usize, e: &[f64], lo: f64, hi: f64) -> (f64, f64) {
        let mut profile = e.to_vec();
        let mut f = |x: f64| {
            profile[j] = x;
            self.objective(j, &profile).map(|v| v.total).unwrap_or(f64::NEG_INFINITY)
        };
        let m = golden_section_max(&mut f, lo, hi, self.settings.br_tolerance * hi.max(1.0));
        (m.x, m.value)
    }
}

/// Optimal schedule for given incumbent wealth and PDV/resale data on a
/// grid: equalises `w~ + p` across homes subject to `sum tau weight = e`.
pub fn optimal_tax_schedule(
    district: usize,
    e: f64,
    weights: &[f64],
    old_wealth: &[f64],
    m: &[f64],
    p2: &[f64],
    r: f64,
) -> Result<TaxSchedule> {
    let mass: f64 = weights.iter().sum();
    let wealth: Vec<f64> =
        old_wealth.iter().zip(m.iter().zip(p2)).map(|(w, (m, p2))| w + two_period_price(0.0, *p2, *m, r)).collect();
    let total: f64 = weights.iter().zip(&wealth).map(|(a, b)| a * b).sum();
    let c = (total - e) / mass;
    if !(c > CONSUMPTION_FLOOR) {
        return Err(Error::RevenueInfeasible { district, revenue: e });
    }
    Ok(TaxSchedule {
        district,
        quantiles: vec![],
        qualities: vec![],
        weights: weights.to_vec(),
        tau: wealth.iter().map(|w| w - c).collect(),
        revenue: e,
        post_tax_wealth: Some(c),
    })
}

/// Convenience wrapper: the Nash equilibrium with default constraints.
pub fn nash_equilibrium(econ: &Economy, settings: SolverSettings) -> Result<GameSolution> {
    Game::new(econ, settings)?.nash_equilibrium()
}
