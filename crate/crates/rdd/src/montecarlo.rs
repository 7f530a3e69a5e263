//! Parallel Monte Carlo over simulated panels.
//!
//! Replication `i` draws its panel from a seed derived from the root seed and
//! `i` alone, so results do not depend on the number of worker threads.

use rayon::prelude::*;
use serde::Serialize;

use crate::dgp::{generate_panel, DgpParams};
use crate::error::Result;
use crate::estimate::RddEstimate;
use crate::panel::Panel;

/// SplitMix64 finaliser applied to `root + (i + 1) * golden`, all wrapping.
pub fn replication_seed(root: u64, i: u64) -> u64 {
    let mut z = root.wrapping_add(i.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Applies `f` to `reps` independent panels, in replication order.
pub fn replicate<T, F>(params: &DgpParams, reps: usize, root_seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&Panel) -> Result<T> + Sync,
{
    params.validate()?;
    (0..reps as u64).into_par_iter().map(|i| f(&generate_panel(params, replication_seed(root_seed, i))?)).collect()
}

/// Summary of estimates against a known value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Coverage {
    pub reps: usize,
    pub truth: f64,
    pub mean_estimate: f64,
    pub mean_std_error: f64,
    /// Share of 95% intervals containing `truth`.
    pub coverage: f64,
    /// Share of replications rejecting a zero effect at 5%.
    pub rejection_rate: f64,
}

impl Coverage {
    pub fn of(estimates: &[RddEstimate], truth: f64) -> Self {
        let n = estimates.len().max(1) as f64;
        let share = |f: &dyn Fn(&RddEstimate) -> bool| estimates.iter().filter(|e| f(e)).count() as f64 / n;
        Self {
            reps: estimates.len(),
            truth,
            mean_estimate: estimates.iter().map(|e| e.estimate).sum::<f64>() / n,
            mean_std_error: estimates.iter().map(|e| e.std_error).sum::<f64>() / n,
            coverage: share(&|e| e.covers(truth)),
            rejection_rate: share(&|e| e.rejects_zero(0.05)),
        }
    }

    pub fn bias(&self) -> f64 {
        self.mean_estimate - self.truth
    }
}
