//! `rdd simulate`, `rdd estimate` and `rdd montecarlo`.

use std::fs::File;
use std::path::PathBuf;

use fiscal_tiebout_rdd::report::{write_bins_csv, write_estimates_csv, EstimateRow};
use fiscal_tiebout_rdd::{
    binned_scatter, build_sample, generate_panel, local_linear_jump, poly3_fuzzy, poly3_jump, replicate,
    replication_seed, Coverage, DgpParams, Field, OutcomeSpec, Panel, RddEstimate, Spec,
};

use crate::error::{CliError, Result};
use crate::output::{num, opt};
use crate::RunContext;

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> fiscal_tiebout_rdd::Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

pub fn simulate(ctx: &mut RunContext) -> Result<()> {
    let dgp = ctx.config.rdd()?.dgp.clone();
    let panel = generate_panel(&dgp, ctx.seed)?;
    ctx.out.write("panel.csv", &csv_bytes(|b| panel.write_csv(b))?)?;
    ctx.out.write("adjacency.csv", &csv_bytes(|b| panel.write_adjacency_csv(b))?)?;
    let votes = panel.rows.iter().filter(|r| r.margin.is_some()).count();
    let md = format!(
        "# Simulated panel\n\n{} municipalities, {} years, {} municipality-years with a usable vote, {} contiguity edges.\n\n\
         Planted effects: kappa = {}, beta1 = {}, psi = {} (seed {}).\n",
        dgp.municipalities(),
        dgp.years,
        votes,
        panel.adjacency.len(),
        dgp.kappa,
        dgp.beta1,
        dgp.psi,
        ctx.seed
    );
    ctx.out.write("summary.md", md.as_bytes())
}

fn resolve(ctx: &RunContext, configured: &Option<PathBuf>, default: &str) -> PathBuf {
    match configured {
        Some(p) if p.is_absolute() => p.clone(),
        Some(p) => ctx.config_dir.join(p),
        None => ctx.out.path(default),
    }
}

fn open(path: &PathBuf) -> Result<File> {
    File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn estimate_spec(
    x: &[f64],
    y: &[f64],
    spec: Spec,
    ik: &fiscal_tiebout_rdd::IkConstants,
) -> fiscal_tiebout_rdd::Result<RddEstimate> {
    match spec {
        Spec::Poly3 => poly3_jump(x, y),
        Spec::LocalLinear => local_linear_jump(x, y, None, ik),
    }
}

pub fn estimate(ctx: &mut RunContext) -> Result<()> {
    let block = ctx.config.rdd()?.estimate.clone();
    let (panel_path, adj_path) =
        (resolve(ctx, &block.panel, "panel.csv"), resolve(ctx, &block.adjacency, "adjacency.csv"));
    let panel = Panel::read_csv(open(&panel_path)?, open(&adj_path)?)?;

    let mut rows = Vec::new();
    for outcome in &block.outcomes {
        for &lag in &block.lags {
            let s = build_sample(&panel, &[*outcome], lag)?;
            for &spec in &block.specs {
                rows.push(EstimateRow {
                    outcome: outcome.label(),
                    lag,
                    estimate: estimate_spec(&s.x, &s.y[0], spec, &block.ik)?,
                });
            }
            let name = format!("bins_{}_lag{lag}.csv", outcome.label());
            ctx.out.write(&name, &csv_bytes(|b| write_bins_csv(b, &binned_scatter(&s.x, &s.y[0], block.bins)))?)?;
        }
    }
    ctx.out.write("estimates.csv", &csv_bytes(|b| write_estimates_csv(b, &rows))?)?;

    let mut fuzzy_rows = Vec::new();
    for f in &block.fuzzy {
        for &lag in &block.lags {
            let s = build_sample(&panel, &[f.outcome, f.treatment], lag)?;
            let est = poly3_fuzzy(&s.x, &s.y[0], &s.y[1])?;
            let fs = est.first_stage.expect("fuzzy estimates carry a first stage");
            fuzzy_rows.push(vec![
                f.outcome.label(),
                f.treatment.label(),
                lag.to_string(),
                num(est.estimate),
                num(est.std_error),
                num(est.p_value),
                est.n_effective.to_string(),
                num(fs.estimate),
                num(fs.std_error),
                num(fs.f_stat),
                fs.weak.to_string(),
            ]);
        }
    }
    ctx.out.table(
        "fuzzy.csv",
        &[
            "outcome",
            "treatment",
            "lag",
            "estimate",
            "se",
            "p",
            "n",
            "first_stage",
            "first_stage_se",
            "first_stage_f",
            "weak",
        ],
        fuzzy_rows,
    )?;

    let mut md =
        String::from("# RDD estimates\n\n| outcome | lag | spec | estimate | se | p |\n|---|---|---|---|---|---|\n");
    for r in &rows {
        let e = &r.estimate;
        md += &format!(
            "| {} | {} | {} | {:.5} | {:.5} | {:.4} |\n",
            r.outcome,
            r.lag,
            e.spec.name(),
            e.estimate,
            e.std_error,
            e.p_value
        );
    }
    ctx.out.write("summary.md", md.as_bytes())
}

/// The simulated design with every planted effect removed.
fn null_of(p: &DgpParams) -> DgpParams {
    DgpParams { kappa: 0.0, beta1: 0.0, psi: 0.0, beta_income: 0.0, ..p.clone() }
}

pub fn montecarlo(ctx: &mut RunContext) -> Result<()> {
    let rdd = ctx.config.rdd()?.clone();
    let (reps, lag) = (rdd.montecarlo.reps, rdd.montecarlo.lag);
    let (tax, home) = (OutcomeSpec::growth(Field::AvgTax), OutcomeSpec::growth(Field::HomeValue));
    let ik = rdd.estimate.ik;
    let planted = replicate(&rdd.dgp, reps, ctx.seed, |panel| {
        let s = build_sample(panel, &[home, tax], lag)?;
        Ok([
            poly3_jump(&s.x, &s.y[1])?,
            poly3_fuzzy(&s.x, &s.y[0], &s.y[1])?,
            local_linear_jump(&s.x, &s.y[1], None, &ik)?,
        ])
    })?;
    let null_root = replication_seed(ctx.seed, u64::MAX);
    let null = replicate(&null_of(&rdd.dgp), reps, null_root, |panel| {
        let s = build_sample(panel, &[tax], lag)?;
        poly3_jump(&s.x, &s.y[0])
    })?;

    let rows = planted.iter().zip(&null).enumerate().map(|(i, (p, z))| {
        let mut r = vec![i.to_string(), replication_seed(ctx.seed, i as u64).to_string()];
        for e in p {
            r.push(num(e.estimate));
            r.push(num(e.std_error));
        }
        r.push(opt(p[2].bandwidth));
        r.push(num(z.estimate));
        r.push(num(z.std_error));
        r
    });
    ctx.out.table(
        "replications.csv",
        &[
            "rep",
            "seed",
            "sharp",
            "sharp_se",
            "fuzzy",
            "fuzzy_se",
            "local_linear",
            "local_linear_se",
            "bandwidth",
            "null",
            "null_se",
        ],
        rows,
    )?;

    let column = |k: usize| planted.iter().map(|p| p[k]).collect::<Vec<_>>();
    let agree = planted
        .iter()
        .filter(|p| {
            (p[0].estimate - p[2].estimate).abs() <= 2.0 * (p[0].std_error.powi(2) + p[2].std_error.powi(2)).sqrt()
        })
        .count() as f64
        / reps as f64;
    let summaries = [
        ("sharp_poly3", Coverage::of(&column(0), rdd.dgp.kappa)),
        ("fuzzy_poly3", Coverage::of(&column(1), rdd.dgp.beta1)),
        ("sharp_local_linear", Coverage::of(&column(2), rdd.dgp.kappa)),
        ("null_poly3", Coverage::of(&null, 0.0)),
    ];
    let rows = summaries.iter().map(|(name, c)| {
        vec![
            name.to_string(),
            c.reps.to_string(),
            num(c.truth),
            num(c.mean_estimate),
            num(c.mean_std_error),
            num(c.coverage),
            num(c.rejection_rate),
        ]
    });
    ctx.out.table(
        "coverage.csv",
        &["estimator", "reps", "truth", "mean_estimate", "mean_se", "coverage", "rejection_rate"],
        rows,
    )?;

    let mut md = format!("# Monte Carlo\n\n{reps} replications at lag {lag}, root seed {}.\n\n", ctx.seed);
    md += "| estimator | truth | mean | coverage | rejection rate |\n|---|---|---|---|---|\n";
    for (name, c) in &summaries {
        md += &format!(
            "| {name} | {} | {:.5} | {:.3} | {:.3} |\n",
            c.truth, c.mean_estimate, c.coverage, c.rejection_rate
        );
    }
    md += &format!(
        "\nLocal-linear and cubic estimates within two joint standard errors in {:.1}% of replications.\n",
        100.0 * agree
    );
    ctx.out.write("summary.md", md.as_bytes())
}
