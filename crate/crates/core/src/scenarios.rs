//! Ready-made scenarios used by the tests, the guide and the bundled configs.

use crate::distribution::Distribution;
use crate::econ::UtilitySpec;
use crate::economy::{District, Economy, OutsideOption, RenterShare, SchoolTech};

fn base(districts: Vec<District>, income: Distribution, rate: f64, alpha: f64) -> Economy {
    Economy {
        districts,
        income,
        utility: UtilitySpec::Log,
        rate,
        school: SchoolTech::Log { alpha },
        theta: 1.0,
        outside_option: OutsideOption::Pdv { value: 0.0 },
        reference_expenditure: None,
    }
}

/// Two districts with uniform housing on `[0, 1]` and uniform incomes on
/// `[0, 1]`; with school levels `(0.2, 0)` the richer district's homes start
/// at type 0.1 and the poorer's end at 0.9.
pub fn uniform_two(rate: f64, outside_pdv: f64) -> Economy {
    let mut econ = base(
        vec![District::new("A", Distribution::uniform(0.0, 1.0)), District::new("B", Distribution::uniform(0.0, 1.0))],
        Distribution::uniform(0.0, 1.0),
        rate,
        1.0,
    );
    econ.outside_option = OutsideOption::Pdv { value: outside_pdv };
    econ
}

/// Supports of the default three-district scenario, richest first.
pub const DEFAULT_SUPPORTS: [(f64, f64); 3] = [(0.3, 1.0), (0.15, 0.85), (0.0, 0.7)];

/// Three districts with overlapping uniform housing stocks, incomes uniform
/// on `[1, 3]`, log utility, `r = 0.3`, `s(e) = 0.5 ln(1 + e)` and the given
/// renter share everywhere.
pub fn default_three(renter_share: f64) -> Economy {
    let districts = DEFAULT_SUPPORTS
        .iter()
        .enumerate()
        .map(|(j, &(lo, hi))| {
            District::new(format!("D{j}"), Distribution::uniform(lo, hi))
                .with_renter_share(RenterShare::Constant(renter_share))
        })
        .collect();
    base(districts, Distribution::uniform(1.0, 3.0), 0.3, 0.5)
}

/// Two identical districts with uniform housing on `[0, 1]`.
pub fn symmetric_two(renter_share: f64) -> Economy {
    let districts = ["A", "B"]
        .iter()
        .map(|id| {
            District::new(*id, Distribution::uniform(0.0, 1.0)).with_renter_share(RenterShare::Constant(renter_share))
        })
        .collect();
    base(districts, Distribution::uniform(1.0, 3.0), 0.3, 0.5)
}

/// Two districts whose homes each share a single quality, higher in `A`.
pub fn homogeneous_two() -> Economy {
    let districts = vec![District::new("A", Distribution::Atom(0.8)), District::new("B", Distribution::Atom(0.2))];
    base(districts, Distribution::uniform(1.0, 3.0), 0.3, 0.5)
}

/// Four districts with staggered uniform housing stocks.
pub fn staggered_four() -> Economy {
    let supports = [(0.45, 1.0), (0.3, 0.85), (0.15, 0.7), (0.0, 0.55)];
    let districts = supports
        .iter()
        .enumerate()
        .map(|(j, &(lo, hi))| District::new(format!("D{j}"), Distribution::uniform(lo, hi)))
        .collect();
    base(districts, Distribution::uniform(1.0, 3.0), 0.3, 0.5)
}
