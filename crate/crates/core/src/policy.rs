//! Expenditure caps, fees with transfers, floors and the renters extension.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::districts::{Constraints, Game, GameSolution, SolverSettings, TaxSchedule};
use crate::economy::Economy;
use crate::error::{Error, Result};
use crate::market::{assign_by_school_levels, money_values, Allocation, MoneyValueSolution};
use crate::numerics::golden_section_max;

/// Slack on "weakly better off" absorbing solver noise.
pub const PARETO_TOL: f64 = 1e-9;

/// A levy on spending above a threshold, redistributed as lump sums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeePolicy {
    /// Spending level above which the fee applies, per district.
    pub threshold: Vec<f64>,
    /// Fee per unit of spending above the threshold, in `[0, 1]`.
    pub fee_rate: f64,
    /// Share of collected fees each district receives; sums to one.
    pub transfer_weights: Vec<f64>,
}

impl FeePolicy {
    pub fn validate(&self, n: usize) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidScenario(format!("fee policy: {m}")));
        if self.threshold.len() != n || self.transfer_weights.len() != n {
            return bad("threshold and transfer_weights need one entry per district");
        }
        if !(0.0..=1.0).contains(&self.fee_rate) {
            return bad("fee_rate must lie in [0, 1]");
        }
        if self.threshold.iter().any(|&t| !(t >= 0.0)) {
            return bad("thresholds must be nonnegative");
        }
        if self.transfer_weights.iter().any(|&w| !(w >= 0.0)) {
            return bad("transfer weights must be nonnegative");
        }
        if (self.transfer_weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return bad("transfer weights must sum to one");
        }
        Ok(())
    }

    /// Fee paid by district `j` when spending `e`.
    pub fn fee(&self, j: usize, e: f64) -> f64 {
        self.fee_rate * (e - self.threshold[j]).max(0.0)
    }

    pub fn total_fees(&self, e: &[f64]) -> f64 {
        e.iter().enumerate().map(|(j, &x)| self.fee(j, x)).sum()
    }

    /// Lump sum received by district `j` at profile `e`.
    pub fn transfer(&self, j: usize, e: &[f64]) -> f64 {
        self.transfer_weights[j] * self.total_fees(e)
    }
}

/// What happens to districts without a cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UncappedMode {
    /// Held at their baseline spending.
    #[default]
    Fixed,
    /// Free to re-optimise.
    Reoptimize,
}

/// Upper bounds on spending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapPolicy {
    pub caps: Vec<Option<f64>>,
    #[serde(default)]
    pub uncapped: UncappedMode,
}

impl CapPolicy {
    /// Caps on the districts in `z` lowering each one's school quality by
    /// `delta` below its level at `e_star`, so quality gaps within `z` are
    /// preserved.
    pub fn common_reduction(econ: &Economy, e_star: &[f64], z: &[usize], delta: f64) -> Self {
        let caps = (0..e_star.len())
            .map(|j| z.contains(&j).then(|| econ.expenditure_for_level(j, econ.school_level(j, e_star[j]) - delta)))
            .collect();
        Self { caps, uncapped: UncappedMode::Fixed }
    }

    fn binds(&self, e: &[f64]) -> bool {
        self.caps.iter().zip(e).any(|(c, &x)| matches!(c, Some(c) if *c < x))
    }
}

/// One evaluated point of a policy sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    /// Common change: school-quality reduction for caps, spending increase
    /// for floors.
    pub delta: f64,
    pub profile: Vec<f64>,
    pub objective_delta: Vec<f64>,
}

impl SweepPoint {
    fn worst(&self) -> f64 {
        self.objective_delta.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Welfare comparison of a policy against the baseline equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyReport {
    pub baseline: GameSolution,
    pub treated: GameSolution,
    /// Treated minus baseline objective, per district.
    pub objective_delta: Vec<f64>,
    pub pareto: bool,
    pub strict_gainers: Vec<usize>,
    pub harmed: Vec<usize>,
    /// The chosen common quality reduction (caps) or spending increment (floors).
    pub chosen_delta: Option<f64>,
    pub sweep: Vec<SweepPoint>,
}

impl PolicyReport {
    fn new(baseline: GameSolution, treated: GameSolution, chosen_delta: Option<f64>, sweep: Vec<SweepPoint>) -> Self {
        let objective_delta: Vec<f64> =
            treated.objectives.iter().zip(&baseline.objectives).map(|(t, b)| t.total - b.total).collect();
        let pareto = objective_delta.iter().all(|&d| d >= -PARETO_TOL);
        let strict_gainers = (0..objective_delta.len()).filter(|&j| objective_delta[j] > PARETO_TOL).collect();
        let harmed = (0..objective_delta.len()).filter(|&j| objective_delta[j] < -PARETO_TOL).collect();
        Self { baseline, treated, objective_delta, pareto, strict_gainers, harmed, chosen_delta, sweep }
    }
}

/// Re-solves the game with capped strategy spaces.
///
/// Non-binding caps return the baseline unchanged.
pub fn solve_capped_equilibrium(
    econ: &Economy,
    settings: &SolverSettings,
    baseline: &GameSolution,
    policy: &CapPolicy,
) -> Result<GameSolution> {
    let n = econ.n();
    if policy.caps.len() != n {
        return Err(Error::InvalidScenario("caps need one entry per district".into()));
    }
    if policy.caps.iter().flatten().any(|&c| !(c >= 0.0)) {
        return Err(Error::InvalidScenario("caps must be nonnegative".into()));
    }
    if !policy.binds(&baseline.e_star) {
        return Ok(baseline.clone());
    }
    let mut constraints = Constraints::none(n);
    constraints.upper = policy.caps.clone();
    if policy.uncapped == UncappedMode::Fixed {
        for j in 0..n {
            if policy.caps[j].is_none() {
                constraints.fixed[j] = Some(baseline.e_star[j]);
            }
        }
    }
    let start: Vec<f64> = baseline.e_star.iter().zip(&policy.caps).map(|(&e, c)| c.map_or(e, |c| e.min(c))).collect();
    let mut settings = settings.clone();
    settings.initial_profile = Some(start);
    settings.multistart = false;
    Game::new(econ, settings)?.with_constraints(constraints).nash_equilibrium()
}

fn objective_deltas(treated: &GameSolution, baseline: &GameSolution) -> Vec<f64> {
    treated.objectives.iter().zip(&baseline.objectives).map(|(t, b)| t.total - b.total).collect()
}

/// Fixed-gap optima `e~_j` for the districts in `z`, with gaps held to the
/// other members of `z`.
pub fn fixed_gap_levels(game: &Game, z: &[usize], e_star: &[f64]) -> Result<Vec<f64>> {
    z.par_iter().map(|&j| game.fixed_gap_best_response(j, z, e_star)).collect()
}

/// Searches common school-quality reductions `delta` in
/// `(0, min_j (s_j(e*_j) - s_j(e~_j))]` on the districts in `z` for the one
/// maximising the smallest welfare gain.
pub fn find_pareto_caps(econ: &Economy, settings: &SolverSettings, z: &[usize]) -> Result<PolicyReport> {
    let baseline = Game::new(econ, settings.clone())?.nash_equilibrium()?;
    find_pareto_caps_from(econ, settings, &baseline, z)
}

pub fn find_pareto_caps_from(
    econ: &Economy,
    settings: &SolverSettings,
    baseline: &GameSolution,
    z: &[usize],
) -> Result<PolicyReport> {
    if z.is_empty() || z.iter().any(|&j| j >= econ.n()) {
        return Err(Error::InvalidScenario("cap target set must be a nonempty set of districts".into()));
    }
    let game = Game::new(econ, settings.clone())?;
    let e_tilde = fixed_gap_levels(&game, z, &baseline.e_star)?;
    let delta_max = z
        .iter()
        .zip(&e_tilde)
        .map(|(&j, &t)| econ.school_level(j, baseline.e_star[j]) - econ.school_level(j, t))
        .fold(f64::INFINITY, f64::min);
    if !(delta_max > 1e-9) {
        return Err(Error::NoImprovingCap);
    }
    let evaluate = |delta: f64| -> Result<SweepPoint> {
        let policy = CapPolicy::common_reduction(econ, &baseline.e_star, z, delta);
        let treated = solve_capped_equilibrium(econ, settings, baseline, &policy)?;
        Ok(SweepPoint { delta, objective_delta: objective_deltas(&treated, baseline), profile: treated.e_star })
    };
    let grid: Vec<f64> = (1..=8).map(|k| delta_max * k as f64 / 8.0).collect();
    let mut sweep: Vec<SweepPoint> = grid.par_iter().map(|&d| evaluate(d)).collect::<Result<_>>()?;
    let z_gain = |p: &SweepPoint| z.iter().all(|&j| p.objective_delta[j] > PARETO_TOL);
    if !sweep.iter().any(z_gain) {
        return Err(Error::NoImprovingCap);
    }
    let best = (0..sweep.len())
        .max_by(|&a, &b| sweep[a].worst().total_cmp(&sweep[b].worst()).then(b.cmp(&a)))
        .expect("nonempty sweep");
    let lo = if best == 0 { 0.0 } else { grid[best - 1] };
    let hi = grid[(best + 1).min(grid.len() - 1)];
    let mut chosen = sweep[best].clone();
    if hi > lo && best + 1 < grid.len() {
        let mut f = |d: f64| evaluate(d).map(|p| p.worst()).unwrap_or(f64::NEG_INFINITY);
        let m = golden_section_max(&mut f, lo.max(1e-12 * delta_max), hi, 1e-4 * delta_max);
        if m.value > chosen.worst() {
            chosen = evaluate(m.x)?;
        }
    }
    let policy = CapPolicy::common_reduction(econ, &baseline.e_star, z, chosen.delta);
    let treated = solve_capped_equilibrium(econ, settings, baseline, &policy)?;
    sweep.sort_by(|a, b| a.delta.total_cmp(&b.delta));
    Ok(PolicyReport::new(baseline.clone(), treated, Some(chosen.delta), sweep))
}

/// Welfare along common quality reductions `delta` on `z`.
pub fn cap_sweep(
    econ: &Economy,
    settings: &SolverSettings,
    baseline: &GameSolution,
    z: &[usize],
    deltas: &[f64],
) -> Result<Vec<SweepPoint>> {
    deltas
        .par_iter()
        .map(|&delta| {
            let policy = CapPolicy::common_reduction(econ, &baseline.e_star, z, delta);
            let treated = solve_capped_equilibrium(econ, settings, baseline, &policy)?;
            Ok(SweepPoint { delta, objective_delta: objective_deltas(&treated, baseline), profile: treated.e_star })
        })
        .collect()
}

/// Re-solves the game with the fee policy embedded in every district's budget.
pub fn solve_fee_policy(
    econ: &Economy,
    settings: &SolverSettings,
    baseline: &GameSolution,
    policy: &FeePolicy,
) -> Result<PolicyReport> {
    policy.validate(econ.n())?;
    if policy.fee_rate == 0.0 {
        return Ok(PolicyReport::new(baseline.clone(), baseline.clone(), None, vec![]));
    }
    let mut settings = settings.clone();
    settings.initial_profile = Some(baseline.e_star.clone());
    settings.multistart = false;
    let treated = Game::new(econ, settings)?.with_fee(Some(policy.clone())).nash_equilibrium()?;
    Ok(PolicyReport::new(baseline.clone(), treated, None, vec![]))
}

/// Stationary rents on one district's grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RentalOutcome {
    pub district: usize,
    pub qualities: Vec<f64>,
    pub m: Vec<f64>,
    pub tau: Vec<f64>,
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
}

impl RentalOutcome {
    /// Largest deviation from `f1 + tau + (f2 + tau)/(1+r) = -m`.
    pub fn identity_residual(&self, r: f64) -> f64 {
        (0..self.m.len())
            .map(|k| (self.f1[k] + self.tau[k] + (self.f2[k] + self.tau[k]) / (1.0 + r) + self.m[k]).abs())
            .fold(0.0, f64::max)
    }
}

/// Per-period rent, net of tax, in a stationary rental market.
pub fn stationary_rent(m: f64, tau: f64, r: f64) -> f64 {
    -m * (1.0 + r) / (2.0 + r) - tau
}

/// Rents solving the rental identity at every node of each tax schedule.
pub fn rental_rates(mvs: &MoneyValueSolution, taxes: &[TaxSchedule], r: f64) -> Vec<RentalOutcome> {
    taxes
        .iter()
        .map(|t| {
            let m: Vec<f64> = t.quantiles.iter().map(|&p| mvs.pdv_at_quantile(t.district, p)).collect();
            let f: Vec<f64> = m.iter().zip(&t.tau).map(|(&m, &tau)| stationary_rent(m, tau, r)).collect();
            RentalOutcome {
                district: t.district,
                qualities: t.qualities.clone(),
                m,
                tau: t.tau.clone(),
                f1: f.clone(),
                f2: f,
            }
        })
        .collect()
}

/// Outcome of the expenditure-floor analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct FloorReport {
    pub baseline: GameSolution,
    pub e_tilde: Vec<f64>,
    /// `e*_j < e~_j`: the district under-spends relative to the fixed-gap problem.
    pub under_spends: Vec<bool>,
    /// Every district under-spends, so a common floor can help all.
    pub applicable: bool,
    pub report: Option<PolicyReport>,
}

/// Checks whether a common spending floor improves every district.
pub fn expenditure_floor_check(econ: &Economy, settings: &SolverSettings) -> Result<FloorReport> {
    let game = Game::new(econ, settings.clone())?;
    let baseline = game.nash_equilibrium()?;
    let all: Vec<usize> = (0..econ.n()).collect();
    let e_tilde = fixed_gap_levels(&game, &all, &baseline.e_star)?;
    let under_spends: Vec<bool> = baseline.e_star.iter().zip(&e_tilde).map(|(e, t)| e < t).collect();
    let applicable = under_spends.iter().all(|&b| b);
    if !applicable {
        return Ok(FloorReport { baseline, e_tilde, under_spends, applicable, report: None });
    }
    let delta_max = e_tilde.iter().zip(&baseline.e_star).map(|(t, e)| t - e).fold(f64::INFINITY, f64::min);
    let solve_floor = |delta: f64| -> Result<GameSolution> {
        let mut constraints = Constraints::none(econ.n());
        constraints.lower = baseline.e_star.iter().map(|e| Some(e + delta)).collect();
        let mut s = settings.clone();
        s.initial_profile = Some(baseline.e_star.iter().map(|e| e + delta).collect());
        s.multistart = false;
        Game::new(econ, s)?.with_constraints(constraints).nash_equilibrium()
    };
    let grid: Vec<f64> = (1..=8).map(|k| delta_max * k as f64 / 8.0).collect();
    let mut sweep: Vec<SweepPoint> = grid
        .par_iter()
        .map(|&delta| {
            let t = solve_floor(delta)?;
            Ok(SweepPoint { delta, objective_delta: objective_deltas(&t, &baseline), profile: t.e_star })
        })
        .collect::<Result<_>>()?;
    sweep.sort_by(|a, b| a.delta.total_cmp(&b.delta));
    let best = (0..sweep.len())
        .max_by(|&a, &b| sweep[a].worst().total_cmp(&sweep[b].worst()).then(b.cmp(&a)))
        .expect("nonempty sweep");
    let delta = sweep[best].delta;
    let treated = solve_floor(delta)?;
    let report = PolicyReport::new(baseline.clone(), treated, Some(delta), sweep);
    Ok(FloorReport { baseline, e_tilde, under_spends, applicable, report: Some(report) })
}

/// Configuration classes of a one-district spending increase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StaticsCase {
    /// The raised district's worst location is above every other district's best.
    Dominant,
    /// Even after the increase, every other district's worst location is
    /// above the raised district's best.
    Dominated,
    /// Supports overlap and the raised district's worst location is not the lowest.
    OverlapAbove,
    /// Supports overlap and the raised district holds the lowest locations.
    OverlapBelow,
}

/// Result of one spending step in [`comparative_statics_audit`].
#[derive(Debug, Clone, PartialEq)]
pub struct StaticsStep {
    pub step: f64,
    pub case: StaticsCase,
    /// Types at or below this one keep their assignment and PDVs.
    pub unchanged_below: f64,
    pub points: usize,
    /// Largest `|m_new - m_old|` where equality is predicted.
    pub max_equality_gap: f64,
    /// Points where the predicted strict sign fails.
    pub sign_failures: usize,
}

/// Shrinking-step difference quotient at one home.
#[derive(Debug, Clone, PartialEq)]
pub struct QuotientCheck {
    pub district: usize,
    pub quality: f64,
    pub expected_sign: f64,
    pub quotients: Vec<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaticsAudit {
    pub district: usize,
    pub steps: Vec<StaticsStep>,
    pub quotients: Vec<QuotientCheck>,
    pub passed: bool,
}

/// Tolerance for "unchanged" PDVs.
const EQUALITY_TOL: f64 = 1e-9;

fn classify(econ: &Economy, j: usize, s_old: &[f64], s_new: &[f64]) -> StaticsCase {
    let d = &econ.districts;
    let others = || (0..econ.n()).filter(move |&k| k != j);
    if others().all(|k| d[j].housing.lo() + s_old[j] >= d[k].housing.hi() + s_old[k]) {
        StaticsCase::Dominant
    } else if others().all(|k| d[j].housing.hi() + s_new[j] < d[k].housing.lo() + s_new[k]) {
        StaticsCase::Dominated
    } else if others().all(|k| d[j].housing.lo() + s_new[j] >= d[k].housing.lo() + s_new[k]) {
        StaticsCase::OverlapAbove
    } else {
        StaticsCase::OverlapBelow
    }
}

/// Highest type below which the location-quality profile, measured from the
/// bottom of the income support, is the same in both allocations.
pub fn unchanged_prefix(old: &Allocation, new: &Allocation) -> f64 {
    let base_old = old.segments[0].l_lo;
    let base_new = new.segments[0].l_lo;
    let same = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + a.abs());
    let mut w = old.w_min();
    for (a, b) in old.segments.iter().zip(&new.segments) {
        let ids = |s: &crate::market::Segment| {
            let mut v: Vec<usize> = s.members.iter().map(|m| m.district).collect();
            v.sort();
            v
        };
        let start_same = same(a.w_lo, b.w_lo) && same(a.l_lo - base_old, b.l_lo - base_new);
        if !start_same || ids(a) != ids(b) || a.atom != b.atom || !same(a.slope(), b.slope()) {
            return w;
        }
        if !same(a.w_hi, b.w_hi) {
            return a.w_hi.min(b.w_hi);
        }
        w = a.w_hi;
    }
    w
}

/// Raises district `j`'s spending from `e` by each of `steps` and checks the
/// predicted pattern of PDV changes on a grid of `grid` homes per district:
/// unchanged where the allocation below a home is unchanged, strictly lower
/// in district `j` and strictly higher elsewhere beyond that point.
pub fn comparative_statics_audit(
    econ: &Economy,
    j: usize,
    e: &[f64],
    steps: &[f64],
    grid: usize,
) -> Result<StaticsAudit> {
    let s_old = econ.school_levels(e);
    let old_alloc = assign_by_school_levels(econ, &s_old)?;
    let old = money_values(econ, &old_alloc)?;
    let span = old_alloc.w_max() - old_alloc.w_min();
    // Close to the boundary of the unchanged region PDV changes vanish
    // continuously, so strictness is only demanded a little beyond it.
    let band = 0.02 * span;
    let quantiles: Vec<f64> = (0..grid).map(|i| (i as f64 + 0.5) / grid as f64).collect();

    let mut results = Vec::with_capacity(steps.len());
    for &step in steps {
        let mut e_new = e.to_vec();
        e_new[j] += step;
        let s_new = econ.school_levels(&e_new);
        let new_alloc = assign_by_school_levels(econ, &s_new)?;
        let new = money_values(econ, &new_alloc)?;
        let cutoff = unchanged_prefix(&old_alloc, &new_alloc);
        let mut result = StaticsStep {
            step,
            case: classify(econ, j, &s_old, &s_new),
            unchanged_below: cutoff,
            points: 0,
            max_equality_gap: 0.0,
            sign_failures: 0,
        };
        for k in 0..econ.n() {
            let sign = if k == j { -1.0 } else { 1.0 };
            for &p in &quantiles {
                let w = old_alloc.type_at_quantile(k, p);
                let diff = new.pdv_at_quantile(k, p) - old.pdv_at_quantile(k, p);
                result.points += 1;
                if w <= cutoff {
                    result.max_equality_gap = result.max_equality_gap.max(diff.abs());
                } else if sign * diff < -EQUALITY_TOL || (w > cutoff + band && sign * diff <= EQUALITY_TOL) {
                    result.sign_failures += 1;
                }
            }
        }
        results.push(result);
    }

    // Difference quotients at homes well inside the region of strict change
    // for the smallest step.
    let mut quotients = Vec::new();
    if let Some(&h0) = steps.iter().min_by(|a, b| a.total_cmp(b)) {
        let hs: Vec<f64> = (0..5).map(|i| h0 / 2f64.powi(i)).collect();
        let profiles: Vec<(MoneyValueSolution, f64)> = hs
            .iter()
            .map(|&h| {
                let mut e_new = e.to_vec();
                e_new[j] += h;
                let a = assign_by_school_levels(econ, &econ.school_levels(&e_new))?;
                let cutoff = unchanged_prefix(&old_alloc, &a);
                Ok((money_values(econ, &a)?, cutoff))
            })
            .collect::<Result<_>>()?;
        let cutoff = profiles.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        for k in 0..econ.n() {
            let sign = if k == j { -1.0 } else { 1.0 };
            for &p in &[0.25, 0.5, 0.75, 0.95] {
                let w = old_alloc.type_at_quantile(k, p);
                if w <= cutoff + band {
                    continue;
                }
                let base = old.pdv_at_quantile(k, p);
                let qs: Vec<f64> =
                    profiles.iter().zip(&hs).map(|((mvs, _), &h)| (mvs.pdv_at_quantile(k, p) - base) / h).collect();
                let largest = qs.iter().map(|q| q.abs()).fold(0.0, f64::max);
                let passed = qs.iter().all(|&q| sign * q > 0.0) && qs.last().is_some_and(|q| q.abs() >= 0.1 * largest);
                quotients.push(QuotientCheck {
                    district: k,
                    quality: old_alloc.housing(k).quantile(p),
                    expected_sign: sign,
                    quotients: qs,
                    passed,
                });
            }
        }
    }
    let passed = results.iter().all(|r| r.sign_failures == 0 && r.max_equality_gap <= EQUALITY_TOL)
        && quotients.iter().all(|q| q.passed);
    Ok(StaticsAudit { district: j, steps: results, quotients, passed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rent_examples() {
        assert_eq!(stationary_rent(0.0, 0.0, 0.05), 0.0);
        assert!((stationary_rent(-2.1, 0.0, 0.05) - 2.1 * 1.05 / 2.05).abs() < 1e-15);
        assert!((stationary_rent(-2.1, 0.0, 0.05) - 1.0756).abs() < 1e-4);
    }

    #[test]
    fn fee_accounting_balances() {
        let fee = FeePolicy { threshold: vec![0.5, 0.5, 0.0], fee_rate: 0.2, transfer_weights: vec![0.0, 0.25, 0.75] };
        fee.validate(3).unwrap();
        let e = [1.0, 0.2, 0.3];
        let total = fee.total_fees(&e);
        assert!((total - (0.1 + 0.0 + 0.06)).abs() < 1e-15);
        let paid: f64 = (0..3).map(|j| fee.transfer(j, &e)).sum();
        assert!((paid - total).abs() < 1e-15);
    }

    #[test]
    fn invalid_fee_rejected() {
        let fee = FeePolicy { threshold: vec![0.0; 2], fee_rate: 1.5, transfer_weights: vec![0.5, 0.5] };
        assert!(fee.validate(2).is_err());
        let fee = FeePolicy { threshold: vec![0.0; 2], fee_rate: 0.5, transfer_weights: vec![0.5, 0.6] };
        assert!(fee.validate(2).is_err());
    }
}
