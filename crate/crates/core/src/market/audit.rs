//! Incentive-compatibility diagnostics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::market::assign::Allocation;
use crate::market::money::MoneyValueSolution;

/// The worst deviation found by [`ic_audit`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deviation {
    pub income: f64,
    pub district: usize,
    pub quality: f64,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcReport {
    pub samples: usize,
    /// Largest utility gain from moving to another location (zero if none).
    pub max_violation: f64,
    pub worst: Option<Deviation>,
}

/// Samples `(w, j, q)` and measures how much type `w` would gain by taking
/// the bundle of home `q` in district `j` instead of its own.
pub fn ic_audit(alloc: &Allocation, mvs: &MoneyValueSolution, samples: usize, seed: u64) -> IcReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let closed = mvs.closed_form();
    let mut report = IcReport { samples, max_violation: 0.0, worst: None };
    for _ in 0..samples {
        let w = alloc.income().quantile(rng.random::<f64>());
        let j = rng.random_range(0..alloc.n());
        let p: f64 = rng.random();
        let q = alloc.housing(j).quantile(p);
        let own = mvs.total_value(w);
        let m_alt = mvs.pdv_at_quantile(j, p);
        let alt = q + alloc.school[j] + closed.value(w, m_alt).unwrap_or(f64::NEG_INFINITY);
        let gain = alt - own;
        if gain > report.max_violation {
            report.max_violation = gain;
            report.worst = Some(Deviation { income: w, district: j, quality: q, gain });
        }
    }
    report
}
