mod support;

use fiscal_tiebout::market::{assign_by_school_levels, money_values};
use support::{discrete_equilibrium, uniform_two};

#[test]
fn uniform_two_district_matches_discrete_equilibrium() {
    let econ = uniform_two(0.05, 1.0);
    let school = [0.2, 0.0];
    let alloc = assign_by_school_levels(&econ, &school).unwrap();
    let mvs = money_values(&econ, &alloc).unwrap();
    let disc = discrete_equilibrium(&econ, &school, 200, 1.0);

    // Discrete cutoffs: mass boundaries where district A starts and B ends.
    let cell = 1.0 / 200.0;
    let first_a = disc.district.iter().position(|&d| d == 0).unwrap();
    let last_b = disc.district.iter().rposition(|&d| d == 1).unwrap();
    let w_lower = econ.income.quantile(first_a as f64 / 200.0);
    let w_upper = econ.income.quantile((last_b + 1) as f64 / 200.0);
    assert!((w_lower - alloc.cutoffs.w_lower.unwrap()).abs() <= cell);
    assert!((w_upper - alloc.cutoffs.w_upper.unwrap()).abs() <= cell);

    let scale = disc.pdv.iter().fold(0.0f64, |a, m| a.max(m.abs()));
    let err = disc
        .district
        .iter()
        .zip(&disc.location)
        .zip(&disc.pdv)
        .map(|((&j, &l), &m)| (mvs.pdv_at(j, l - school[j]) - m).abs())
        .fold(0.0, f64::max);
    eprintln!("oracle relative error {:e}", err / scale);
    assert!(err / scale < 1e-3, "relative error {}", err / scale);
    for w in disc.types.windows(2) {
        assert!(mvs.pdv_at_type(w[1]) < mvs.pdv_at_type(w[0]));
    }
}
