//! `policy caps`, `policy fees` and `policy floor`.

use fiscal_tiebout::policy::{
    expenditure_floor_check, find_pareto_caps_from, fixed_gap_levels, solve_fee_policy, CapPolicy, FeePolicy,
    PolicyReport,
};
use fiscal_tiebout::{Economy, Error, Game, GameSolution};

use crate::config::{ThresholdRule, Thresholds};
use crate::equilibrium::{expenditure_rows, solve_game, EXPENDITURE_HEADER};
use crate::error::{CliError, Result};
use crate::output::{list, num, opt, OutputDir};
use crate::RunContext;

fn status(d: f64) -> &'static str {
    if d > fiscal_tiebout::policy::PARETO_TOL {
        "gain"
    } else if d < -fiscal_tiebout::policy::PARETO_TOL {
        "loss"
    } else {
        "unchanged"
    }
}

fn write_sweep(out: &mut OutputDir, report: &PolicyReport) -> Result<()> {
    let n = report.baseline.e_star.len();
    let mut header = vec!["delta".to_string(), "worst_gain".to_string()];
    header.extend((0..n).map(|j| format!("e_{j}")));
    header.extend((0..n).map(|j| format!("gain_{j}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = report.sweep.iter().map(|p| {
        let worst = p.objective_delta.iter().copied().fold(f64::INFINITY, f64::min);
        let mut r = vec![num(p.delta), num(worst)];
        r.extend(p.profile.iter().map(|x| num(*x)));
        r.extend(p.objective_delta.iter().map(|x| num(*x)));
        r
    });
    out.table("sweep.csv", &header, rows)
}

fn verdict(title: &str, report: Option<&PolicyReport>, econ: &Economy, extra: &str) -> String {
    let mut md = format!("# {title}\n\n");
    match report {
        None => md += "Verdict: none found. No admissible policy improves every targeted district.\n",
        Some(r) => {
            md += &format!("Verdict: pareto = {}", r.pareto);
            if let Some(d) = r.chosen_delta {
                md += &format!(", chosen delta = {d:.6e}");
            }
            md += "\n\n| district | id | baseline e | treated e | objective delta | status |\n|---|---|---|---|---|---|\n";
            for j in 0..econ.n() {
                md += &format!(
                    "| {j} | {} | {:.6} | {:.6} | {:.3e} | {} |\n",
                    econ.districts[j].id,
                    r.baseline.e_star[j],
                    r.treated.e_star[j],
                    r.objective_delta[j],
                    status(r.objective_delta[j])
                );
            }
        }
    }
    md + extra
}

pub fn caps(ctx: &mut RunContext) -> Result<()> {
    let econ = ctx.config.economy()?.clone();
    let block = ctx.config.policy.caps.clone().unwrap_or_default();
    let z = block.districts.clone().unwrap_or_else(|| (0..econ.n()).collect());
    let settings = ctx.config.solver.clone();
    let baseline = solve_game(&econ, &settings, &mut ctx.out)?;
    let game = Game::new(&econ, settings.clone())?;
    let tilde = fixed_gap_levels(&game, &z, &baseline.e_star)?;
    let mut e_tilde = vec![None; econ.n()];
    for (k, &j) in z.iter().enumerate() {
        e_tilde[j] = Some(tilde[k]);
    }
    let margins: String = z
        .iter()
        .zip(&tilde)
        .map(|(&j, t)| format!("- district {j}: e* - e~ = {:.6e}\n", baseline.e_star[j] - t))
        .collect();
    let extra = format!("\nFixed-gap optima for the capped set:\n\n{margins}");

    let report = match find_pareto_caps_from(&econ, &settings, &baseline, &z) {
        Ok(r) => Some(r),
        Err(Error::NoImprovingCap) => None,
        Err(e) => return Err(e.into()),
    };
    let caps = report
        .as_ref()
        .and_then(|r| r.chosen_delta)
        .map(|d| CapPolicy::common_reduction(&econ, &baseline.e_star, &z, d).caps)
        .unwrap_or_else(|| vec![None; econ.n()]);
    let treated = report.as_ref().map(|r| &r.treated);
    let rows = (0..econ.n()).map(|j| {
        let d = report.as_ref().map(|r| r.objective_delta[j]);
        vec![
            j.to_string(),
            econ.districts[j].id.clone(),
            z.contains(&j).to_string(),
            num(baseline.e_star[j]),
            opt(e_tilde[j]),
            opt(caps[j]),
            opt(treated.map(|t| t.e_star[j])),
            opt(d),
            d.map(status).unwrap_or("none").to_string(),
        ]
    });
    ctx.out.table(
        "policy_report.csv",
        &["district", "id", "capped", "baseline_e", "e_tilde", "cap", "treated_e", "objective_delta", "status"],
        rows,
    )?;
    if let Some(r) = &report {
        write_sweep(&mut ctx.out, r)?;
    }
    ctx.out.write("verdict.md", verdict("Spending caps", report.as_ref(), &econ, &extra).as_bytes())
}

fn fee_policy(ctx: &mut RunContext, econ: &Economy, baseline: &GameSolution) -> Result<FeePolicy> {
    let block =
        ctx.config.policy.fees.clone().ok_or_else(|| CliError::Validation("missing [policy.fees] block".into()))?;
    let n = econ.n();
    let mut threshold = match &block.threshold {
        Thresholds::Levels(t) => t.clone(),
        Thresholds::Rule(ThresholdRule::ParetoCaps) => {
            let payers: Vec<usize> = (0..n).filter(|j| !block.exempt.contains(j)).collect();
            let report = match find_pareto_caps_from(econ, &ctx.config.solver, baseline, &payers) {
                Ok(r) => r,
                Err(Error::NoImprovingCap) => {
                    return Err(CliError::Validation(
                        "pareto_caps thresholds: no improving cap for the paying districts".into(),
                    ))
                }
                Err(e) => return Err(e.into()),
            };
            let delta = report.chosen_delta.expect("cap reports carry a delta");
            CapPolicy::common_reduction(econ, &baseline.e_star, &payers, delta)
                .caps
                .iter()
                .map(|c| c.unwrap_or(f64::MAX))
                .collect()
        }
    };
    for &j in &block.exempt {
        threshold[j] = f64::MAX;
    }
    let policy = FeePolicy { threshold, fee_rate: block.fee_rate, transfer_weights: block.transfer_weights };
    policy.validate(n)?;
    Ok(policy)
}

pub fn fees(ctx: &mut RunContext) -> Result<()> {
    let econ = ctx.config.economy()?.clone();
    let settings = ctx.config.solver.clone();
    let baseline = solve_game(&econ, &settings, &mut ctx.out)?;
    let policy = fee_policy(ctx, &econ, &baseline)?;
    let report = solve_fee_policy(&econ, &settings, &baseline, &policy)?;
    let e = &report.treated.e_star;
    let rows = (0..econ.n()).map(|j| {
        let t = policy.threshold[j];
        vec![
            j.to_string(),
            econ.districts[j].id.clone(),
            if t == f64::MAX { String::new() } else { num(t) },
            num(report.baseline.e_star[j]),
            num(e[j]),
            num(policy.fee(j, e[j])),
            num(policy.transfer(j, e)),
            num(report.objective_delta[j]),
            status(report.objective_delta[j]).to_string(),
        ]
    });
    ctx.out.table(
        "policy_report.csv",
        &["district", "id", "threshold", "baseline_e", "treated_e", "fee", "transfer", "objective_delta", "status"],
        rows,
    )?;
    let extra = format!("\nFee rate {}; total fees {:.6e}.\n", policy.fee_rate, policy.total_fees(e));
    ctx.out.write("verdict.md", verdict("Spending fees", Some(&report), &econ, &extra).as_bytes())
}

pub fn floor(ctx: &mut RunContext) -> Result<()> {
    let econ = ctx.config.economy()?.clone();
    let check = expenditure_floor_check(&econ, &ctx.config.solver)?;
    if let Some(r) = &check.report {
        write_sweep(&mut ctx.out, r)?;
    }
    let rows = (0..econ.n()).map(|j| {
        let r = check.report.as_ref();
        vec![
            j.to_string(),
            econ.districts[j].id.clone(),
            num(check.baseline.e_star[j]),
            num(check.e_tilde[j]),
            check.under_spends[j].to_string(),
            opt(r.map(|r| r.treated.e_star[j])),
            opt(r.map(|r| r.objective_delta[j])),
            r.map(|r| status(r.objective_delta[j])).unwrap_or("none").to_string(),
        ]
    });
    ctx.out.table(
        "policy_report.csv",
        &["district", "id", "baseline_e", "e_tilde", "under_spends", "treated_e", "objective_delta", "status"],
        rows,
    )?;
    ctx.out.table("baseline.csv", &EXPENDITURE_HEADER, expenditure_rows(&econ, &check.baseline))?;
    let extra = if check.applicable {
        String::new()
    } else {
        format!(
            "\nFloors are not applicable: not every district under-spends (e* = [{}], e~ = [{}]).\n",
            list(&check.baseline.e_star),
            list(&check.e_tilde)
        )
    };
    ctx.out.write("verdict.md", verdict("Spending floors", check.report.as_ref(), &econ, &extra).as_bytes())
}
