//! Synthetic referendum panels with planted effects.
//!
//! Municipalities sit on a rectangular grid with rook contiguity. Each year a
//! municipality may hold one or two referenda with margins drawn from a
//! centred symmetric beta distribution. Levies grow multiplicatively,
//!
//! ```text
//! AvgTax[t+1] = AvgTax[t] * (1 + g[t+1]),
//! g[t+1] = mu + u + eps + kappa * (wins in the last `effect_years` years)
//!          + psi * kappa * (neighbours' wins in that window),
//! ```
//!
//! so the one-year levy growth after a vote jumps by exactly `kappa` at the
//! cutoff. Home-value growth loads on levy growth with coefficient `beta1`
//! and on the common shock `u`, so OLS of home-value growth on levy growth
//! is confounded while the ratio of jumps recovers `beta1`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::{aggregate_referenda, DgpTruth, MunicipalityYear, Panel, Referendum, YearOutcome};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DgpParams {
    pub grid_rows: u32,
    pub grid_cols: u32,
    pub years: u32,
    pub start_year: i32,
    /// Probability that a municipality votes in a given year.
    pub referendum_prob: f64,
    /// Probability of a second vote in a voting year.
    pub second_referendum_prob: f64,
    /// Shape of the symmetric beta distribution of yes shares.
    pub margin_beta: f64,
    pub kappa: f64,
    pub beta1: f64,
    pub psi: f64,
    /// Response of income growth to levy growth.
    pub beta_income: f64,
    /// Years over which a win raises levy growth.
    pub effect_years: u32,
    pub tax_growth_mean: f64,
    pub tax_growth_sd: f64,
    pub common_shock_sd: f64,
    pub home_growth_mean: f64,
    pub home_growth_sd: f64,
    /// Loading of home-value growth on the common shock.
    pub home_shock_loading: f64,
    pub income_growth_mean: f64,
    pub income_growth_sd: f64,
    /// Probability that a year with only failed votes goes unreported.
    pub loss_underreport: f64,
    /// In `[0, 1]`: zero drops losses at random; positive values drop losses
    /// followed by low levy growth more often.
    pub underreport_correlation: f64,
    /// Probability that a municipality shares its school district with its
    /// right-hand neighbour.
    pub shared_district_prob: f64,
}

impl Default for DgpParams {
    fn default() -> Self {
        Self {
            grid_rows: 20,
            grid_cols: 29,
            years: 11,
            start_year: 2000,
            referendum_prob: 0.95,
            second_referendum_prob: 0.1,
            margin_beta: 2.0,
            kappa: 0.05,
            beta1: 2.0,
            psi: 0.0,
            beta_income: 0.5,
            effect_years: 1,
            tax_growth_mean: 0.03,
            tax_growth_sd: 0.02,
            common_shock_sd: 0.01,
            home_growth_mean: 0.02,
            home_growth_sd: 0.02,
            home_shock_loading: 1.0,
            income_growth_mean: 0.02,
            income_growth_sd: 0.01,
            loss_underreport: 0.0,
            underreport_correlation: 0.0,
            shared_district_prob: 0.3,
        }
    }
}

impl DgpParams {
    /// The no-effect design: no jump, no response, no spillover.
    pub fn null() -> Self {
        Self { kappa: 0.0, beta1: 0.0, psi: 0.0, beta_income: 0.0, ..Self::default() }
    }

    pub fn municipalities(&self) -> u32 {
        self.grid_rows * self.grid_cols
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParams(m.to_string()));
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if self.grid_rows == 0 || self.grid_cols == 0 {
            return bad("the municipality grid must be nonempty");
        }
        if self.years < 2 {
            return bad("at least two years are needed");
        }
        if self.effect_years == 0 {
            return bad("effect_years must be at least one");
        }
        for (name, p) in [
            ("referendum_prob", self.referendum_prob),
            ("second_referendum_prob", self.second_referendum_prob),
            ("loss_underreport", self.loss_underreport),
            ("underreport_correlation", self.underreport_correlation),
            ("shared_district_prob", self.shared_district_prob),
        ] {
            if !prob(p) {
                return Err(Error::InvalidParams(format!("{name} must lie in [0, 1]")));
            }
        }
        if !(self.margin_beta > 0.0) {
            return bad("margin_beta must be positive");
        }
        let sds = [self.tax_growth_sd, self.common_shock_sd, self.home_growth_sd, self.income_growth_sd];
        if sds.iter().any(|&s| !(s >= 0.0) || !s.is_finite()) {
            return bad("standard deviations must be nonnegative");
        }
        let coefs = [
            self.kappa,
            self.beta1,
            self.psi,
            self.beta_income,
            self.tax_growth_mean,
            self.home_growth_mean,
            self.income_growth_mean,
            self.home_shock_loading,
        ];
        if coefs.iter().any(|c| !c.is_finite()) {
            return bad("coefficients must be finite");
        }
        Ok(())
    }
}

fn normal(sd: f64) -> Normal<f64> {
    Normal::new(0.0, sd).expect("validated standard deviation")
}

/// Simulates a panel; identical parameters and seed give an identical panel.
pub fn generate_panel(params: &DgpParams, seed: u64) -> Result<Panel> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (rows_n, cols_n) = (params.grid_rows, params.grid_cols);
    let n = params.municipalities() as usize;
    let id = |r: u32, c: u32| r * cols_n + c + 1;

    // School districts: a municipality may share one with its right neighbour.
    let mut district = vec![String::new(); n];
    for r in 0..rows_n {
        let mut c = 0;
        while c < cols_n {
            let i = (id(r, c) - 1) as usize;
            district[i] = format!("SD{}", id(r, c));
            if c + 1 < cols_n && rng.random::<f64>() < params.shared_district_prob {
                district[i + 1] = district[i].clone();
                c += 2;
            } else {
                c += 1;
            }
        }
    }
    let mut adjacency = Vec::new();
    for r in 0..rows_n {
        for c in 0..cols_n {
            if c + 1 < cols_n {
                adjacency.push((id(r, c), id(r, c + 1)));
            }
            if r + 1 < rows_n {
                adjacency.push((id(r, c), id(r + 1, c)));
            }
        }
    }
    let mut neighbors = vec![Vec::new(); n];
    for &(a, b) in &adjacency {
        neighbors[(a - 1) as usize].push((b - 1) as usize);
        neighbors[(b - 1) as usize].push((a - 1) as usize);
    }

    let years = params.years as usize;
    let mut tax = vec![vec![0.0; years]; n];
    let mut home = vec![vec![0.0; years]; n];
    let mut income = vec![vec![0.0; years]; n];
    for i in 0..n {
        tax[i][0] = rng.random_range(3000.0..9000.0);
        home[i][0] = rng.random_range(200_000.0..600_000.0);
        income[i][0] = rng.random_range(25_000.0..60_000.0);
    }

    // Votes and the composite treatment of each municipality-year.
    let beta = Beta::new(params.margin_beta, params.margin_beta).expect("validated shape");
    let mut votes = Vec::new();
    for t in 0..years {
        for i in 0..n {
            if rng.random::<f64>() < params.referendum_prob {
                let count = if rng.random::<f64>() < params.second_referendum_prob { 2 } else { 1 };
                for _ in 0..count {
                    votes.push(Referendum {
                        muni_id: i as u32 + 1,
                        year: params.start_year + t as i32,
                        margin: beta.sample(&mut rng) - 0.5,
                    });
                }
            }
        }
    }
    let mut treated = vec![vec![false; years]; n];
    {
        let mut sums: std::collections::BTreeMap<(u32, i32), (f64, usize)> = Default::default();
        for v in &votes {
            let e = sums.entry((v.muni_id, v.year)).or_default();
            e.0 += v.margin;
            e.1 += 1;
        }
        for ((muni, year), (sum, count)) in sums {
            treated[(muni - 1) as usize][(year - params.start_year) as usize] = sum / count as f64 >= 0.0;
        }
    }

    let (tax_noise, common, home_noise, income_noise) = (
        normal(params.tax_growth_sd),
        normal(params.common_shock_sd),
        normal(params.home_growth_sd),
        normal(params.income_growth_sd),
    );
    let h = params.effect_years as usize;
    let mut next_tax_noise = vec![vec![0.0; years]; n];
    for t in 1..years {
        let window = t.saturating_sub(h)..t;
        for i in 0..n {
            let own = window.clone().filter(|&s| treated[i][s]).count() as f64;
            let spill: f64 =
                neighbors[i].iter().map(|&k| window.clone().filter(|&s| treated[k][s]).count() as f64).sum();
            let u = common.sample(&mut rng);
            let eps = tax_noise.sample(&mut rng);
            next_tax_noise[i][t - 1] = eps + u;
            let g = params.tax_growth_mean + u + eps + params.kappa * own + params.psi * params.kappa * spill;
            let gh = params.home_growth_mean
                + params.beta1 * g
                + params.home_shock_loading * u
                + home_noise.sample(&mut rng);
            let gi = params.income_growth_mean + params.beta_income * g + income_noise.sample(&mut rng);
            tax[i][t] = tax[i][t - 1] * (1.0 + g);
            home[i][t] = home[i][t - 1] * (1.0 + gh);
            income[i][t] = income[i][t - 1] * (1.0 + gi);
        }
    }

    let aggregated = aggregate_referenda(&votes);
    let mut rows = Vec::with_capacity(n * years);
    for i in 0..n {
        for t in 0..years {
            let year = params.start_year + t as i32;
            let mut margin = match aggregated.get(&(i as u32 + 1, year)) {
                Some(YearOutcome::Usable { margin, .. }) => Some(*margin),
                _ => None,
            };
            if let Some(m) = margin {
                if m < 0.0 && params.loss_underreport > 0.0 {
                    let tilt = if t + 1 < years && next_tax_noise[i][t] < 0.0 { 1.0 } else { -1.0 };
                    let p = (params.loss_underreport * (1.0 + params.underreport_correlation * tilt)).clamp(0.0, 1.0);
                    if rng.random::<f64>() < p {
                        margin = None;
                    }
                }
            }
            rows.push(MunicipalityYear {
                muni_id: i as u32 + 1,
                year,
                margin,
                win: margin.map(|m| m >= 0.0),
                avg_tax: tax[i][t],
                income_pc: income[i][t],
                home_value: home[i][t],
                school_district_id: district[i].clone(),
            });
        }
    }
    Panel::new(rows, adjacency, Some(DgpTruth { kappa: params.kappa, beta1: params.beta1, psi: params.psi }))
}
