//! Money values from the envelope condition.
//!
//! Along the assignment the total value `U(w) = ell(w) + M(w)` satisfies
//! `U'(w) = V_1(w, m(w))`, so `dM/dw = V_1 - ell'`. Writing `M = V(w, m)`
//! and using `V_m = u'(c1)` turns this into an equation for the PDV itself,
//!
//! ```text
//! dm/dw = -ell'(w) / u'(c1(w, m)),
//! ```
//!
//! which needs no inversion of `V` inside the integrator. Where `ell` jumps
//! (a gap between districts' location qualities, or an atom of identical
//! homes) the marginal type is indifferent across the jump, which pins down
//! the PDV just above it.

use crate::econ::ClosedForm;
use crate::economy::{Economy, OutsideOption};
use crate::error::{Error, Result};
use crate::market::assign::Allocation;
use crate::numerics::{hermite, rk4_step};

/// Default number of fixed integration steps per segment.
pub const DEFAULT_ODE_STEPS: usize = 96;

#[derive(Debug, Clone, PartialEq)]
struct Nodes {
    w: Vec<f64>,
    m: Vec<f64>,
    dm: Vec<f64>,
}

/// The priced equilibrium: PDVs and money values along the assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct MoneyValueSolution {
    alloc: Allocation,
    closed: ClosedForm,
    nodes: Vec<Nodes>,
    offsets: Vec<f64>,
}

/// Integrates the envelope condition with [`DEFAULT_ODE_STEPS`] steps per segment.
pub fn money_values(econ: &Economy, alloc: &Allocation) -> Result<MoneyValueSolution> {
    money_values_with_steps(econ, alloc, DEFAULT_ODE_STEPS)
}

/// PDV of the outside option available to the poorest arrival.
pub fn outside_pdv(econ: &Economy) -> Result<f64> {
    let w = econ.income_lo();
    match econ.outside_option {
        OutsideOption::Pdv { value } => Ok(value),
        OutsideOption::MoneyValue { value } => ClosedForm::new(econ.rate, econ.utility).invert(w, value),
    }
}

pub fn money_values_with_steps(econ: &Economy, alloc: &Allocation, steps: usize) -> Result<MoneyValueSolution> {
    let closed = ClosedForm::new(econ.rate, econ.utility);
    let steps = steps.max(1);
    let w0 = alloc.w_min();
    let mut m = outside_pdv(econ)?;
    if closed.c1(w0, m).is_none() {
        return Err(Error::InfeasibleBudget { lifetime_wealth: crate::econ::lifetime_wealth(w0, m, econ.rate) });
    }
    let fail = |w: f64, reason: &str| Error::OdeStepFailure { income: w, reason: reason.to_string() };

    let mut nodes = Vec::with_capacity(alloc.segments.len());
    let mut prev_l: Option<f64> = None;
    for seg in &alloc.segments {
        if let Some(l) = prev_l {
            let jump = seg.l_lo - l;
            if jump > 0.0 {
                let v = closed.value(seg.w_lo, m).ok_or_else(|| fail(seg.w_lo, "infeasible bundle at a jump"))?;
                m = closed.invert(seg.w_lo, v - jump).map_err(|e| fail(seg.w_lo, &e.to_string()))?;
            }
        }
        prev_l = Some(seg.l_hi);
        let k = seg.slope();
        if k == 0.0 {
            nodes.push(Nodes { w: vec![seg.w_lo, seg.w_hi], m: vec![m, m], dm: vec![0.0, 0.0] });
            continue;
        }
        let mut rhs = |w: f64, m: f64| match closed.pdv_marginal(w, m) {
            Some(mu) if mu.is_finite() && mu > 0.0 => -k / mu,
            _ => f64::NAN,
        };
        let h = (seg.w_hi - seg.w_lo) / steps as f64;
        let mut ws = Vec::with_capacity(steps + 1);
        let mut ms = Vec::with_capacity(steps + 1);
        let mut ds = Vec::with_capacity(steps + 1);
        ws.push(seg.w_lo);
        ms.push(m);
        ds.push(rhs(seg.w_lo, m));
        for i in 0..steps {
            let w = seg.w_lo + h * i as f64;
            m = rk4_step(&mut rhs, w, m, h);
            let w_next = if i + 1 == steps { seg.w_hi } else { seg.w_lo + h * (i + 1) as f64 };
            let d = rhs(w_next, m);
            if !m.is_finite() || !d.is_finite() {
                return Err(fail(w_next, "consumption left the feasible region"));
            }
            ws.push(w_next);
            ms.push(m);
            ds.push(d);
        }
        nodes.push(Nodes { w: ws, m: ms, dm: ds });
    }
    Ok(MoneyValueSolution { alloc: alloc.clone(), closed, nodes, offsets: vec![0.0; alloc.n()] })
}

impl MoneyValueSolution {
    pub fn allocation(&self) -> &Allocation {
        &self.alloc
    }

    pub fn rate(&self) -> f64 {
        self.closed.r
    }

    /// PDV `m(w)` of the bundle bought by type `w`.
    pub fn pdv_at_type(&self, w: f64) -> f64 {
        self.pdv_in_segment(self.alloc.segment_index(w), w)
    }

    fn pdv_in_segment(&self, k: usize, w: f64) -> f64 {
        let n = &self.nodes[k];
        let last = n.w.len() - 1;
        if w <= n.w[0] {
            return n.m[0];
        }
        if w >= n.w[last] {
            return n.m[last];
        }
        let h = (n.w[last] - n.w[0]) / last as f64;
        let i = (((w - n.w[0]) / h) as usize).min(last - 1);
        hermite(n.w[i], n.m[i], n.dm[i], n.w[i + 1], n.m[i + 1], n.dm[i + 1], w)
    }

    /// Money value `M(w) = V(w, m(w))`.
    pub fn money_value(&self, w: f64) -> f64 {
        self.closed.value(w, self.pdv_at_type(w)).unwrap_or(f64::NEG_INFINITY)
    }

    /// Total value `U(w) = ell(w) + M(w)`.
    pub fn total_value(&self, w: f64) -> f64 {
        self.alloc.location_quality(w) + self.money_value(w)
    }

    /// PDV of the home at quality `q` in district `j`.
    pub fn pdv_at(&self, j: usize, q: f64) -> f64 {
        let h = self.alloc.housing(j);
        self.pdv_at_quantile(j, if h.is_atom() { 0.5 } else { h.cdf(q) })
    }

    /// PDV of the home at quantile `p` of district `j`'s housing.
    pub fn pdv_at_quantile(&self, j: usize, p: f64) -> f64 {
        let (k, w) = self.alloc.locate_quantile(j, p);
        self.pdv_in_segment(k, w) + self.offsets[j]
    }

    /// A copy with district `j`'s PDV schedule shifted by `delta`.
    ///
    /// Shifted schedules are no longer equilibrium objects; this exists to
    /// exercise incentive-compatibility diagnostics.
    pub fn with_pdv_offset(&self, j: usize, delta: f64) -> Self {
        let mut out = self.clone();
        out.offsets[j] += delta;
        out
    }

    /// PDVs at the integration nodes, `(w, m)` pairs in type order.
    pub fn nodes(&self) -> Vec<(f64, f64)> {
        self.nodes.iter().flat_map(|n| n.w.iter().copied().zip(n.m.iter().copied())).collect()
    }

    pub fn closed_form(&self) -> &ClosedForm {
        &self.closed
    }
}
