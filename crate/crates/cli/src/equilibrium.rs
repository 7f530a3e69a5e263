//! `equilibrium solve` and `equilibrium audit`.

use fiscal_tiebout::market::{assign_by_school_levels, ic_audit, money_values, steady_state_price, MoneyValueSolution};
use fiscal_tiebout::policy::{comparative_statics_audit, rental_rates};
use fiscal_tiebout::{Economy, Error, Game, GameSolution, SolverSettings, TaxSchedule};

use crate::error::{CliError, Result};
use crate::output::{list, num, opt, OutputDir};
use crate::RunContext;

/// Solves the game, writing the iteration trace before failing on
/// non-convergence.
pub fn solve_game(econ: &Economy, settings: &SolverSettings, out: &mut OutputDir) -> Result<GameSolution> {
    match Game::new(econ, settings.clone())?.nash_equilibrium() {
        Ok(sol) => Ok(sol),
        Err(Error::NoConvergence { iterations, residual, trace }) => {
            let rows = trace.iter().enumerate().map(|(i, e)| {
                let mut r = vec![i.to_string()];
                r.extend(e.iter().map(|x| num(*x)));
                r
            });
            let mut header = vec!["iteration".to_string()];
            header.extend((0..econ.n()).map(|j| format!("e_{j}")));
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            out.table("convergence_trace.csv", &header, rows)?;
            Err(CliError::Convergence(format!(
                "best-response iteration stopped after {iterations} iterations with residual {residual:e}; trace in convergence_trace.csv"
            )))
        }
        Err(e) => Err(e.into()),
    }
}

pub fn expenditure_rows(econ: &Economy, sol: &GameSolution) -> Vec<Vec<String>> {
    (0..econ.n())
        .map(|j| {
            let o = &sol.objectives[j];
            vec![
                j.to_string(),
                econ.districts[j].id.clone(),
                num(sol.e_star[j]),
                num(econ.school_level(j, sol.e_star[j])),
                num(econ.district_mass(j)),
                num(sol.tax_star[j].revenue),
                num(o.total),
                num(o.school_term),
                num(o.owner_welfare),
                num(o.renter_welfare),
            ]
        })
        .collect()
}

pub const EXPENDITURE_HEADER: [&str; 10] = [
    "district",
    "id",
    "e_star",
    "school_level",
    "mass",
    "revenue",
    "objective",
    "school_term",
    "owner_welfare",
    "renter_welfare",
];

/// Zero taxes on 101 evenly spaced quantiles of each district.
fn untaxed(econ: &Economy) -> Vec<TaxSchedule> {
    (0..econ.n())
        .map(|j| {
            let quantiles: Vec<f64> = (0..=100).map(|k| k as f64 / 100.0).collect();
            let weight = econ.district_mass(j) / quantiles.len() as f64;
            TaxSchedule {
                district: j,
                qualities: quantiles.iter().map(|&p| econ.districts[j].housing.quantile(p)).collect(),
                weights: vec![weight; quantiles.len()],
                tau: vec![0.0; quantiles.len()],
                quantiles,
                revenue: 0.0,
                post_tax_wealth: None,
            }
        })
        .collect()
}

/// School levels, tax schedules and (when the game was played) its solution.
struct Outcome {
    school: Vec<f64>,
    taxes: Vec<TaxSchedule>,
    game: Option<GameSolution>,
}

fn outcome(ctx: &mut RunContext) -> Result<(Economy, Outcome)> {
    let econ = ctx.config.economy()?.clone();
    if let Some(m) = &ctx.config.market {
        let taxes = untaxed(&econ);
        return Ok((econ, Outcome { school: m.school_levels.clone(), taxes, game: None }));
    }
    let sol = solve_game(&econ, &ctx.config.solver, &mut ctx.out)?;
    let school = econ.school_levels(&sol.e_star);
    Ok((econ, Outcome { school, taxes: sol.tax_star.clone(), game: Some(sol) }))
}

fn write_market(out: &mut OutputDir, econ: &Economy, taxes: &[TaxSchedule], mvs: &MoneyValueSolution) -> Result<()> {
    let r = econ.rate;
    let mut tax_rows = Vec::new();
    let mut price_rows = Vec::new();
    for t in taxes {
        for k in 0..t.quantiles.len() {
            let m = mvs.pdv_at_quantile(t.district, t.quantiles[k]);
            tax_rows.push(vec![
                t.district.to_string(),
                num(t.quantiles[k]),
                num(t.qualities[k]),
                num(t.weights[k]),
                num(t.tau[k]),
            ]);
            price_rows.push(vec![
                t.district.to_string(),
                num(t.quantiles[k]),
                num(t.qualities[k]),
                num(m),
                num(t.tau[k]),
                num(steady_state_price(m, t.tau[k], r)?),
            ]);
        }
    }
    out.table("tax_schedules.csv", &["district", "quantile", "quality", "weight", "tau"], tax_rows)?;
    out.table("prices.csv", &["district", "quantile", "quality", "m", "tau", "price"], price_rows)?;

    let alloc = mvs.allocation();
    let seg_rows = alloc.segments.iter().enumerate().map(|(k, s)| {
        let members: Vec<String> = s.members.iter().map(|m| format!("{}:{}", m.district, num(m.share))).collect();
        vec![k.to_string(), num(s.w_lo), num(s.w_hi), num(s.l_lo), num(s.l_hi), s.atom.to_string(), members.join(";")]
    });
    out.table("allocation.csv", &["segment", "w_lo", "w_hi", "l_lo", "l_hi", "atom", "members"], seg_rows)?;

    let c = &alloc.cutoffs;
    let cut_rows = vec![
        vec!["w_min".into(), String::new(), num(alloc.w_min())],
        vec!["w_lower".into(), String::new(), opt(c.w_lower)],
        vec!["w_upper".into(), String::new(), opt(c.w_upper)],
        vec!["w_max".into(), String::new(), num(alloc.w_max())],
        vec!["q_lower".into(), c.q_lower.map(|q| q.0.to_string()).unwrap_or_default(), opt(c.q_lower.map(|q| q.1))],
        vec!["q_upper".into(), c.q_upper.map(|q| q.0.to_string()).unwrap_or_default(), opt(c.q_upper.map(|q| q.1))],
    ];
    out.table("cutoffs.csv", &["name", "district", "value"], cut_rows)?;

    let (lo, hi) = (alloc.w_min(), alloc.w_max());
    let mv_rows = (0..=200).map(|i| {
        let w = lo + (hi - lo) * i as f64 / 200.0;
        vec![num(w), num(alloc.location_quality(w)), num(mvs.pdv_at_type(w)), num(mvs.money_value(w))]
    });
    out.table("money_value.csv", &["w", "location_quality", "m", "money_value"], mv_rows)?;

    if !econ.all_owners() {
        let mut rows = Vec::new();
        for o in rental_rates(mvs, taxes, r) {
            for k in 0..o.m.len() {
                rows.push(vec![
                    o.district.to_string(),
                    num(o.qualities[k]),
                    num(o.m[k]),
                    num(o.tau[k]),
                    num(o.f1[k]),
                    num(o.f2[k]),
                ]);
            }
        }
        out.table("rents.csv", &["district", "quality", "m", "tau", "f1", "f2"], rows)?;
    }
    Ok(())
}

pub fn solve(ctx: &mut RunContext) -> Result<()> {
    let (econ, o) = outcome(ctx)?;
    let mvs = money_values(&econ, &assign_by_school_levels(&econ, &o.school)?)?;
    if let Some(sol) = &o.game {
        ctx.out.table("expenditures.csv", &EXPENDITURE_HEADER, expenditure_rows(&econ, sol))?;
    }
    write_market(&mut ctx.out, &econ, &o.taxes, &mvs)?;

    let alloc = mvs.allocation();
    let mut md = match &o.game {
        Some(sol) => {
            let mut md =
                String::from("# Equilibrium\n\n| district | id | e* | s(e*) | objective |\n|---|---|---|---|---|\n");
            for j in 0..econ.n() {
                md += &format!(
                    "| {j} | {} | {:.6} | {:.6} | {:.6} |\n",
                    econ.districts[j].id, sol.e_star[j], o.school[j], sol.objectives[j].total
                );
            }
            md += &format!("\nBest-response residual {:.3e} after {} iterations.\n", sol.br_residual, sol.iterations);
            if sol.multiple_equilibria {
                md += "\nWarning: iterations from other starting profiles reached a different fixed point.\n";
            }
            md
        }
        None => {
            let mut md =
                String::from("# Housing market at fixed school levels\n\n| district | id | s |\n|---|---|---|\n");
            for j in 0..econ.n() {
                md += &format!("| {j} | {} | {:.6} |\n", econ.districts[j].id, o.school[j]);
            }
            md += "\nNo taxes are levied; prices are capitalised money values.\n";
            md
        }
    };
    md += &format!(
        "\nTypes live in a single overlap from {} to {} (type support [{:.6}, {:.6}]).\n",
        alloc.cutoffs.w_lower.map_or("-".into(), |w| format!("{w:.6}")),
        alloc.cutoffs.w_upper.map_or("-".into(), |w| format!("{w:.6}")),
        alloc.w_min(),
        alloc.w_max()
    );
    ctx.out.write("summary.md", md.as_bytes())
}

struct Check {
    name: &'static str,
    value: f64,
    tolerance: f64,
}

pub fn audit(ctx: &mut RunContext) -> Result<()> {
    let a = ctx.config.audit.clone();
    let (econ, o) = outcome(ctx)?;
    let school = &o.school;
    let alloc = assign_by_school_levels(&econ, school)?;
    let mvs = money_values(&econ, &alloc)?;
    let (lo, hi) = (alloc.w_min(), alloc.w_max());

    let mut clearing: f64 = 0.0;
    let mut monotone: f64 = 0.0;
    let mut last = f64::NEG_INFINITY;
    for i in 0..a.grid {
        let w = lo + (hi - lo) * i as f64 / (a.grid - 1) as f64;
        let total: f64 = (0..econ.n()).map(|j| alloc.gamma(j, w)).sum();
        clearing = clearing.max((total - econ.income.cdf(w)).abs());
        let l = alloc.location_quality(w);
        monotone = monotone.max(last - l);
        last = l;
    }
    let ic = ic_audit(&alloc, &mvs, a.ic_samples, ctx.seed);

    let shifted: Vec<f64> = school.iter().map(|s| s + a.gap_shift).collect();
    let other = money_values(&econ, &assign_by_school_levels(&econ, &shifted)?)?;
    let mut gap: f64 = 0.0;
    for j in 0..econ.n() {
        for k in 0..=100 {
            let p = k as f64 / 100.0;
            gap = gap.max((alloc.type_at_quantile(j, p) - other.allocation().type_at_quantile(j, p)).abs());
            gap = gap.max((mvs.pdv_at_quantile(j, p) - other.pdv_at_quantile(j, p)).abs());
        }
    }
    for k in 0..=100 {
        let w = lo + (hi - lo) * k as f64 / 100.0;
        gap = gap.max((mvs.money_value(w) - other.money_value(w)).abs());
    }

    let r = econ.rate;
    let mut price: f64 = 0.0;
    for t in &o.taxes {
        for k in 0..t.quantiles.len() {
            let m = mvs.pdv_at_quantile(t.district, t.quantiles[k]);
            let dp = steady_state_price(m, t.tau[k] + a.price_shift, r)? - steady_state_price(m, t.tau[k], r)?;
            price = price.max((dp + (1.0 + r) / r * a.price_shift).abs());
        }
    }

    let checks = [
        Check { name: "market_clearing", value: clearing, tolerance: 1e-9 },
        Check { name: "location_decrease", value: monotone.max(0.0), tolerance: 1e-12 },
        Check { name: "ic_violation", value: ic.max_violation, tolerance: 1e-6 },
        Check { name: "gap_invariance", value: gap, tolerance: 1e-9 },
        Check { name: "price_shift", value: price, tolerance: 1e-6 },
    ];
    let rows = checks
        .iter()
        .map(|c| vec![c.name.to_string(), num(c.value), num(c.tolerance), (c.value <= c.tolerance).to_string()]);
    ctx.out.table("audit.csv", &["check", "value", "tolerance", "pass"], rows)?;

    let mut rows = Vec::new();
    let mut statics_ok = true;
    let e_star = o.game.as_ref().map(|g| g.e_star.clone());
    for j in 0..e_star.as_ref().map_or(0, |_| econ.n()) {
        let e_star = e_star.as_deref().unwrap_or_default();
        let audit = comparative_statics_audit(&econ, j, e_star, &a.statics_steps, a.statics_grid)?;
        statics_ok &= audit.passed;
        let quotients_ok = audit.quotients.iter().all(|q| q.passed);
        for s in &audit.steps {
            rows.push(vec![
                j.to_string(),
                num(s.step),
                serde_json::to_value(s.case).map(|v| v.as_str().unwrap_or_default().to_string()).unwrap_or_default(),
                num(s.unchanged_below),
                s.points.to_string(),
                num(s.max_equality_gap),
                s.sign_failures.to_string(),
                quotients_ok.to_string(),
            ]);
        }
    }
    ctx.out.table(
        "statics.csv",
        &[
            "district",
            "step",
            "case",
            "unchanged_below",
            "points",
            "max_equality_gap",
            "sign_failures",
            "quotients_pass",
        ],
        rows,
    )?;

    let mut md = String::from("# Equilibrium audit\n\n| check | value | tolerance | pass |\n|---|---|---|---|\n");
    for c in &checks {
        md += &format!("| {} | {:.3e} | {:.0e} | {} |\n", c.name, c.value, c.tolerance, c.value <= c.tolerance);
    }
    match &e_star {
        Some(e) => {
            md += &format!("\nComparative statics at e*: {}\n", if statics_ok { "pass" } else { "FAIL" });
            md += &format!("\nIC audit: {} sampled deviations, seed {}; e* = [{}].\n", a.ic_samples, ctx.seed, list(e));
        }
        None => {
            md += "\nComparative statics skipped: school levels are fixed.\n";
            md += &format!(
                "\nIC audit: {} sampled deviations, seed {}; s = [{}].\n",
                a.ic_samples,
                ctx.seed,
                list(school)
            );
        }
    }
    ctx.out.write("summary.md", md.as_bytes())
}
