//! CSV output of estimates and binned scatters at full precision.

use std::io::Write;

use crate::error::Result;
use crate::estimate::RddEstimate;
use crate::outcome::Bin;

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// One estimate labelled by outcome and lag.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRow {
    pub outcome: String,
    pub lag: u32,
    pub estimate: RddEstimate,
}

/// Columns `outcome, lag, estimate, se, p, n, bandwidth, spec`; the
/// bandwidth is empty for the cubic specification.
pub fn write_estimates_csv<W: Write>(w: W, rows: &[EstimateRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["outcome", "lag", "estimate", "se", "p", "n", "bandwidth", "spec"])?;
    for r in rows {
        let e = &r.estimate;
        out.write_record([
            r.outcome.clone(),
            r.lag.to_string(),
            fmt_f64(e.estimate),
            fmt_f64(e.std_error),
            fmt_f64(e.p_value),
            e.n_effective.to_string(),
            e.bandwidth.map(fmt_f64).unwrap_or_default(),
            e.spec.name().to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_bins_csv<W: Write>(w: W, bins: &[Bin]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["lo", "hi", "mean_x", "mean_y", "count"])?;
    for b in bins {
        out.write_record([fmt_f64(b.lo), fmt_f64(b.hi), fmt_f64(b.mean_x), fmt_f64(b.mean_y), b.count.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::Spec;

    #[test]
    fn estimates_csv_layout() {
        let estimate = RddEstimate {
            estimate: 0.1,
            std_error: 0.02,
            p_value: 0.5,
            n_effective: 10,
            bandwidth: None,
            spec: Spec::Poly3,
            first_stage: None,
        };
        let mut buf = Vec::new();
        write_estimates_csv(&mut buf, &[EstimateRow { outcome: "growth_avg_tax".into(), lag: 1, estimate }]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("outcome,lag,estimate,se,p,n,bandwidth,spec"));
        assert_eq!(
            lines.next(),
            Some("growth_avg_tax,1,1.0000000000000001e-1,2.0000000000000000e-2,5.0000000000000000e-1,10,,poly3")
        );
        assert_eq!("1.0000000000000001e-1".parse::<f64>().unwrap(), 0.1);
    }
}
