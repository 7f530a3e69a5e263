//! Shared scenarios and a discrete brute-force equilibrium used as an oracle.
#![allow(dead_code)]

use fiscal_tiebout::{Distribution, District, Economy, OutsideOption, RenterShare, SchoolTech};

#[allow(unused_imports)]
pub use fiscal_tiebout::scenarios::uniform_two;

/// Economy with the given housing distributions and renter shares, incomes
/// uniform on `[1, 3]`.
pub fn economy(housing: &[Distribution], renters: &[f64], rate: f64) -> Economy {
    Economy {
        districts: housing
            .iter()
            .zip(renters)
            .enumerate()
            .map(|(j, (h, &r))| District::new(format!("D{j}"), h.clone()).with_renter_share(RenterShare::Constant(r)))
            .collect(),
        income: Distribution::uniform(1.0, 3.0),
        utility: Default::default(),
        rate,
        school: SchoolTech::Log { alpha: 0.5 },
        theta: 1.0,
        outside_option: OutsideOption::Pdv { value: 0.0 },
        reference_expenditure: None,
    }
}

pub fn pwl(knots: &[[f64; 2]]) -> Distribution {
    fiscal_tiebout::DistributionSpec::PiecewiseLinear { knots: knots.to_vec() }.build().unwrap()
}

/// Discrete competitive equilibrium with `n` agents and `n` homes.
pub struct DiscreteEquilibrium {
    /// Agent types in increasing order.
    pub types: Vec<f64>,
    /// District of the home each agent occupies.
    pub district: Vec<usize>,
    /// Location quality of each agent's home.
    pub location: Vec<f64>,
    /// PDV each agent receives.
    pub pdv: Vec<f64>,
}

/// Log-utility money value, written out independently of the crate.
fn log_value(w: f64, m: f64, r: f64) -> f64 {
    let c1 = 0.5 * (w * (2.0 + r) / (1.0 + r) + m);
    2.0 * c1.ln() + (1.0 + r).ln()
}

fn log_invert(w: f64, v: f64, r: f64) -> f64 {
    let c1 = ((v - (1.0 + r).ln()) / 2.0).exp();
    2.0 * c1 - w * (2.0 + r) / (1.0 + r)
}

/// Agents sit at income quantile midpoints, homes at quality quantile
/// midpoints of each district. Homes are ranked by location quality and
/// paired with agents by rank; PDVs follow from making the marginal type
/// between consecutive agents indifferent, starting from a virtual agent at
/// the bottom of the income support holding the outside option.
pub fn discrete_equilibrium(econ: &Economy, school: &[f64], n: usize, outside_pdv: f64) -> DiscreteEquilibrium {
    let r = econ.rate;
    let types: Vec<f64> = (0..n).map(|i| econ.income.quantile((i as f64 + 0.5) / n as f64)).collect();
    let mut homes: Vec<(f64, usize)> = Vec::with_capacity(n);
    for (j, d) in econ.districts.iter().enumerate() {
        let count = (econ.district_mass(j) * n as f64).round() as usize;
        for k in 0..count {
            homes.push((d.housing.quantile((k as f64 + 0.5) / count as f64) + school[j], j));
        }
    }
    assert_eq!(homes.len(), n, "district masses must divide the grid");
    // Round so that exact ties are not broken by floating-point noise.
    let key = |l: f64| (l * 1e12).round();
    homes.sort_by(|a, b| key(a.0).total_cmp(&key(b.0)).then(a.1.cmp(&b.1)));

    let lowest =
        econ.districts.iter().enumerate().map(|(j, d)| d.housing.lo() + school[j]).fold(f64::INFINITY, f64::min);
    let (mut w_prev, mut l_prev, mut m_prev) = (econ.income.lo(), lowest, outside_pdv);
    let mut pdv = Vec::with_capacity(n);
    for i in 0..n {
        let w_mid = 0.5 * (w_prev + types[i]);
        let m = log_invert(w_mid, log_value(w_mid, m_prev, r) - (homes[i].0 - l_prev), r);
        pdv.push(m);
        w_prev = types[i];
        l_prev = homes[i].0;
        m_prev = m;
    }
    DiscreteEquilibrium {
        types,
        district: homes.iter().map(|h| h.1).collect(),
        location: homes.iter().map(|h| h.0).collect(),
        pdv,
    }
}
