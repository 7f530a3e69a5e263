//! One-dimensional distributions with piecewise-linear CDFs or a single atom.
//!
//! Piecewise-linear CDFs keep every object downstream exact: pooled
//! location-quality measures are again piecewise linear, and their quantile
//! functions invert in closed form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Configuration form of a distribution; the CDF is normalised to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionSpec {
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// Ordered `[x, cdf]` pairs; the CDF must start at 0 and end at 1.
    PiecewiseLinear {
        knots: Vec<[f64; 2]>,
    },
    /// All mass at a single point.
    Point {
        at: f64,
    },
}

impl DistributionSpec {
    pub fn build(&self) -> Result<Distribution> {
        match self {
            DistributionSpec::Uniform { lo, hi } => {
                if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                    return Err(Error::InvalidScenario(format!(
                        "uniform support must satisfy lo < hi (got [{lo}, {hi}])"
                    )));
                }
                Ok(Distribution::Linear { xs: vec![*lo, *hi], cs: vec![0.0, 1.0] })
            }
            DistributionSpec::PiecewiseLinear { knots } => {
                if knots.len() < 2 {
                    return Err(Error::InvalidScenario("piecewise_linear needs at least two knots".into()));
                }
                let xs: Vec<f64> = knots.iter().map(|k| k[0]).collect();
                let cs: Vec<f64> = knots.iter().map(|k| k[1]).collect();
                if cs[0] != 0.0 || (cs[cs.len() - 1] - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidScenario("piecewise_linear CDF must run from 0 to 1".into()));
                }
                for w in 0..xs.len() - 1 {
                    if !(xs[w] < xs[w + 1]) || !(cs[w] < cs[w + 1]) {
                        return Err(Error::InvalidScenario(
                            "piecewise_linear knots must be strictly increasing in x and cdf".into(),
                        ));
                    }
                }
                let mut cs = cs;
                let last = cs.len() - 1;
                cs[last] = 1.0;
                Ok(Distribution::Linear { xs, cs })
            }
            DistributionSpec::Point { at } => {
                if !at.is_finite() {
                    return Err(Error::InvalidScenario("point distribution needs a finite location".into()));
                }
                Ok(Distribution::Atom(*at))
            }
        }
    }
}

/// A probability distribution on the real line (unit mass).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistributionSpec", into = "DistributionSpec")]
pub enum Distribution {
    /// Continuous with piecewise-constant density between knots.
    Linear {
        xs: Vec<f64>,
        cs: Vec<f64>,
    },
    Atom(f64),
}

impl Distribution {
    pub fn uniform(lo: f64, hi: f64) -> Self {
        Distribution::Linear { xs: vec![lo, hi], cs: vec![0.0, 1.0] }
    }

    pub fn lo(&self) -> f64 {
        match self {
            Distribution::Linear { xs, .. } => xs[0],
            Distribution::Atom(a) => *a,
        }
    }

    pub fn hi(&self) -> f64 {
        match self {
            Distribution::Linear { xs, .. } => xs[xs.len() - 1],
            Distribution::Atom(a) => *a,
        }
    }

    pub fn is_atom(&self) -> bool {
        matches!(self, Distribution::Atom(_))
    }

    /// Right-continuous CDF.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Distribution::Atom(a) => {
                if x >= *a {
                    1.0
                } else {
                    0.0
                }
            }
            Distribution::Linear { xs, cs } => {
                if x <= xs[0] {
                    return 0.0;
                }
                let n = xs.len();
                if x >= xs[n - 1] {
                    return 1.0;
                }
                let k = xs.partition_point(|&v| v <= x) - 1;
                let t = (x - xs[k]) / (xs[k + 1] - xs[k]);
                cs[k] + t * (cs[k + 1] - cs[k])
            }
        }
    }

    /// Quantile function; `p` is clamped to `[0, 1]`.
    pub fn quantile(&self, p: f64) -> f64 {
        match self {
            Distribution::Atom(a) => *a,
            Distribution::Linear { xs, cs } => {
                let p = p.clamp(0.0, 1.0);
                let n = cs.len();
                if p <= 0.0 {
                    return xs[0];
                }
                if p >= 1.0 {
                    return xs[n - 1];
                }
                let k = (cs.partition_point(|&v| v <= p) - 1).min(n - 2);
                let t = (p - cs[k]) / (cs[k + 1] - cs[k]);
                xs[k] + t * (xs[k + 1] - xs[k])
            }
        }
    }

    /// Density; zero outside the support and for atoms.
    pub fn density(&self, x: f64) -> f64 {
        match self {
            Distribution::Atom(_) => 0.0,
            Distribution::Linear { xs, cs } => {
                let n = xs.len();
                if x < xs[0] || x > xs[n - 1] {
                    return 0.0;
                }
                let k = (xs.partition_point(|&v| v <= x).max(1) - 1).min(n - 2);
                (cs[k + 1] - cs[k]) / (xs[k + 1] - xs[k])
            }
        }
    }

    /// Knot locations and CDF values (`[(a, 1)]` for an atom).
    pub fn knots(&self) -> Vec<(f64, f64)> {
        match self {
            Distribution::Atom(a) => vec![(*a, 1.0)],
            Distribution::Linear { xs, cs } => xs.iter().copied().zip(cs.iter().copied()).collect(),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Distribution::Atom(a) => *a,
            Distribution::Linear { xs, cs } => {
                xs.windows(2).zip(cs.windows(2)).map(|(x, c)| (c[1] - c[0]) * 0.5 * (x[0] + x[1])).sum()
            }
        }
    }
}

impl TryFrom<DistributionSpec> for Distribution {
    type Error = Error;
    fn try_from(spec: DistributionSpec) -> Result<Self> {
        spec.build()
    }
}

impl From<Distribution> for DistributionSpec {
    fn from(d: Distribution) -> Self {
        match d {
            Distribution::Atom(at) => DistributionSpec::Point { at },
            Distribution::Linear { xs, .. } if xs.len() == 2 => DistributionSpec::Uniform { lo: xs[0], hi: xs[1] },
            Distribution::Linear { xs, cs } => {
                DistributionSpec::PiecewiseLinear { knots: xs.into_iter().zip(cs).map(|(x, c)| [x, c]).collect() }
            }
        }
    }
}
