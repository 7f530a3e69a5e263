//! Sharp and fuzzy discontinuity estimators.
//!
//! The global specification regresses the outcome on a cubic in the margin,
//! its interaction with the win indicator `W = 1{margin >= 0}`, and `W`
//! itself; the jump is the coefficient on `W`. The local specification fits
//! triangular-kernel weighted lines on each side within a bandwidth chosen
//! by the Imbens-Kalyanaraman plug-in rule. Standard errors are HC1.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::outcome::{build_sample, OutcomeSpec, Sample};
use crate::panel::Panel;

/// Observations required on each side of the cutoff.
pub const MIN_PER_SIDE: usize = 50;

/// First-stage `|t|` below which the fuzzy estimate is flagged as weak.
pub const WEAK_T: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spec {
    Poly3,
    LocalLinear,
}

impl Spec {
    pub fn name(self) -> &'static str {
        match self {
            Spec::Poly3 => "poly3",
            Spec::LocalLinear => "local_linear",
        }
    }
}

/// First-stage diagnostics of a fuzzy estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstStage {
    pub estimate: f64,
    pub std_error: f64,
    pub t_stat: f64,
    /// Robust Wald statistic for the single excluded instrument, `t²`.
    pub f_stat: f64,
    pub weak: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RddEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub p_value: f64,
    pub n_effective: usize,
    /// Set for the local-linear specification only.
    pub bandwidth: Option<f64>,
    pub spec: Spec,
    /// Set for fuzzy estimates only.
    pub first_stage: Option<FirstStage>,
}

impl RddEstimate {
    fn new(estimate: f64, std_error: f64, n_effective: usize, bandwidth: Option<f64>, spec: Spec) -> Self {
        Self {
            estimate,
            std_error,
            p_value: p_value(estimate, std_error),
            n_effective,
            bandwidth,
            spec,
            first_stage: None,
        }
    }

    /// Whether the 95% normal confidence interval contains `value`.
    pub fn covers(&self, value: f64) -> bool {
        (self.estimate - value).abs() <= 1.959963984540054 * self.std_error
    }

    /// Two-sided rejection of a zero effect at level `alpha`.
    pub fn rejects_zero(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

/// Two-sided normal p-value; a zero standard error gives 0 or 1.
pub fn p_value(estimate: f64, std_error: f64) -> f64 {
    if std_error > 0.0 {
        let z = (estimate / std_error).abs();
        let n = Normal::new(0.0, 1.0).expect("standard normal");
        (2.0 * (1.0 - n.cdf(z))).clamp(0.0, 1.0)
    } else if estimate == 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Weighted least squares with a heteroskedasticity-robust sandwich.
struct Wls {
    x: DMatrix<f64>,
    w: DVector<f64>,
    bread: DMatrix<f64>,
}

impl Wls {
    fn new(x: DMatrix<f64>, w: DVector<f64>) -> Result<Self> {
        let (n, k) = x.shape();
        if n <= k {
            return Err(Error::SingularDesign);
        }
        let xw = DMatrix::from_fn(n, k, |i, j| x[(i, j)] * w[i]);
        let xtx = x.transpose() * &xw;
        // Scale-invariant pivot check before inverting.
        let scale = DVector::from_fn(k, |j, _| xtx[(j, j)].sqrt());
        if scale.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::SingularDesign);
        }
        let normalised = DMatrix::from_fn(k, k, |i, j| xtx[(i, j)] / (scale[i] * scale[j]));
        let svd = normalised.clone().svd(false, false);
        let smallest = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
        if smallest < 1e-12 {
            return Err(Error::SingularDesign);
        }
        let inv = normalised.cholesky().ok_or(Error::SingularDesign)?.inverse();
        let bread = DMatrix::from_fn(k, k, |i, j| inv[(i, j)] / (scale[i] * scale[j]));
        Ok(Self { x, w, bread })
    }

    fn n(&self) -> usize {
        self.x.nrows()
    }

    fn fit(&self, y: &[f64]) -> (DVector<f64>, DVector<f64>) {
        let y = DVector::from_column_slice(y);
        let xty = self.x.transpose() * y.component_mul(&self.w);
        let beta = &self.bread * xty;
        let resid = &y - &self.x * &beta;
        (beta, resid)
    }

    /// HC1 cross-covariance of coefficient vectors fitted on two outcomes.
    fn cross_cov(&self, ea: &DVector<f64>, eb: &DVector<f64>) -> DMatrix<f64> {
        let (n, k) = self.x.shape();
        let mut meat = DMatrix::zeros(k, k);
        for i in 0..n {
            let s = self.w[i] * self.w[i] * ea[i] * eb[i];
            if s == 0.0 {
                continue;
            }
            for a in 0..k {
                let xa = self.x[(i, a)] * s;
                for b in 0..k {
                    meat[(a, b)] += xa * self.x[(i, b)];
                }
            }
        }
        let hc1 = n as f64 / (n - k) as f64;
        &self.bread * meat * &self.bread * hc1
    }
}

fn check_sides(x: &[f64]) -> Result<()> {
    let right = x.iter().filter(|&&v| v >= 0.0).count();
    let left = x.len() - right;
    if left < MIN_PER_SIDE || right < MIN_PER_SIDE {
        return Err(Error::InsufficientData { left, right, needed: MIN_PER_SIDE });
    }
    Ok(())
}

fn poly3_design(x: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(x.len(), 8, |i, j| {
        let m = x[i];
        let w = if m >= 0.0 { 1.0 } else { 0.0 };
        match j {
            0 => 1.0,
            1 => m,
            2 => m * m,
            3 => m * m * m,
            4 => w * m,
            5 => w * m * m,
            6 => w * m * m * m,
            _ => w,
        }
    })
}

const W_COL: usize = 7;

/// Coefficient on `W` in the cubic specification with its HC1 error.
pub fn poly3_jump(x: &[f64], y: &[f64]) -> Result<RddEstimate> {
    check_sides(x)?;
    let ols = Wls::new(poly3_design(x), DVector::from_element(x.len(), 1.0))?;
    let (beta, e) = ols.fit(y);
    let v = ols.cross_cov(&e, &e)[(W_COL, W_COL)];
    Ok(RddEstimate::new(beta[W_COL], v.max(0.0).sqrt(), ols.n(), None, Spec::Poly3))
}

/// Ratio of the outcome jump to the treatment jump on a common sample, with
/// a delta-method standard error from the joint HC1 covariance.
pub fn poly3_fuzzy(x: &[f64], y: &[f64], d: &[f64]) -> Result<RddEstimate> {
    check_sides(x)?;
    let ols = Wls::new(poly3_design(x), DVector::from_element(x.len(), 1.0))?;
    let (by, ey) = ols.fit(y);
    let (bd, ed) = ols.fit(d);
    let (jy, jd) = (by[W_COL], bd[W_COL]);
    let vyy = ols.cross_cov(&ey, &ey)[(W_COL, W_COL)];
    let vdd = ols.cross_cov(&ed, &ed)[(W_COL, W_COL)];
    let vyd = ols.cross_cov(&ey, &ed)[(W_COL, W_COL)];
    let late = jy / jd;
    let var = (vyy - 2.0 * late * vyd + late * late * vdd) / (jd * jd);
    let mut est = RddEstimate::new(late, var.max(0.0).sqrt(), ols.n(), None, Spec::Poly3);
    let sd = vdd.max(0.0).sqrt();
    let t = if sd > 0.0 { jd / sd } else { f64::INFINITY };
    est.first_stage =
        Some(FirstStage { estimate: jd, std_error: sd, t_stat: t, f_stat: t * t, weak: !(t.abs() >= WEAK_T) });
    Ok(est)
}

/// Jump in the outcome at the cutoff from the cubic specification.
pub fn sharp_rdd_poly(panel: &Panel, outcome: OutcomeSpec, lag: u32) -> Result<RddEstimate> {
    let s = build_sample(panel, &[outcome], lag)?;
    poly3_jump(&s.x, &s.y[0])
}

/// Local average treatment effect of `treatment` on `outcome`, both at `lag`.
pub fn fuzzy_rdd(panel: &Panel, outcome: OutcomeSpec, treatment: OutcomeSpec, lag: u32) -> Result<RddEstimate> {
    let s = build_sample(panel, &[outcome, treatment], lag)?;
    poly3_fuzzy(&s.x, &s.y[0], &s.y[1])
}

/// Jump from triangular-kernel local lines; the bandwidth defaults to IK.
pub fn local_linear_rdd(panel: &Panel, outcome: OutcomeSpec, lag: u32, bandwidth: Option<f64>) -> Result<RddEstimate> {
    let s = build_sample(panel, &[outcome], lag)?;
    local_linear_jump(&s.x, &s.y[0], bandwidth, &IkConstants::default())
}

pub fn triangular(u: f64) -> f64 {
    (1.0 - u.abs()).max(0.0)
}

/// Intercept at zero and its robust variance from a kernel-weighted line on
/// the observations selected by `side`.
fn side_intercept(x: &[f64], y: &[f64], h: f64, side: impl Fn(f64) -> bool) -> Result<(f64, f64, usize)> {
    let (xs, ys, ws): (Vec<f64>, Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter(|(&xi, _)| side(xi))
        .map(|(&xi, &yi)| (xi, yi, triangular(xi / h)))
        .filter(|t| t.2 > 0.0)
        .fold((vec![], vec![], vec![]), |mut acc, (a, b, c)| {
            acc.0.push(a);
            acc.1.push(b);
            acc.2.push(c);
            acc
        });
    let n = xs.len();
    let design = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { xs[i] });
    let wls = Wls::new(design, DVector::from_vec(ws))?;
    let (beta, e) = wls.fit(&ys);
    Ok((beta[0], wls.cross_cov(&e, &e)[(0, 0)], n))
}

/// Local-linear jump at zero with bandwidth `h`, or the IK bandwidth.
pub fn local_linear_jump(x: &[f64], y: &[f64], bandwidth: Option<f64>, ik: &IkConstants) -> Result<RddEstimate> {
    check_sides(x)?;
    let h = match bandwidth {
        Some(h) if h > 0.0 && h.is_finite() => h,
        Some(h) => return Err(Error::InvalidParams(format!("bandwidth must be positive, got {h}"))),
        None => ik_bandwidth(x, y, ik)?,
    };
    let within = |pred: fn(f64) -> bool| x.iter().filter(|&&v| pred(v) && v.abs() < h).count();
    let (left, right) = (within(|v| v < 0.0), within(|v| v >= 0.0));
    if left < MIN_PER_SIDE || right < MIN_PER_SIDE {
        return Err(Error::InsufficientData { left, right, needed: MIN_PER_SIDE });
    }
    let (a_l, v_l, n_l) = side_intercept(x, y, h, |v| v < 0.0)?;
    let (a_r, v_r, n_r) = side_intercept(x, y, h, |v| v >= 0.0)?;
    Ok(RddEstimate::new(a_r - a_l, (v_l + v_r).max(0.0).sqrt(), n_l + n_r, Some(h), Spec::LocalLinear))
}

/// Constants of the IK plug-in rule for the triangular kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IkConstants {
    /// Pilot (Silverman-type) bandwidth multiplier.
    pub pilot: f64,
    /// Multiplier of the bandwidth for the second-derivative fits.
    pub curvature: f64,
    /// Numerator of the regularisation terms.
    pub regularization: f64,
    /// Kernel constant of the final bandwidth.
    pub kernel: f64,
}

impl Default for IkConstants {
    fn default() -> Self {
        Self { pilot: 1.84, curvature: 3.56, regularization: 720.0, kernel: 3.4375 }
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / (v.len() as f64 - 1.0)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Least-squares coefficients of `y` on the columns produced by `row`.
fn ols(rows: impl Iterator<Item = (Vec<f64>, f64)>) -> Result<DVector<f64>> {
    let (xs, ys): (Vec<Vec<f64>>, Vec<f64>) = rows.unzip();
    let k = xs.first().map_or(0, Vec::len);
    let design = DMatrix::from_fn(xs.len(), k, |i, j| xs[i][j]);
    Ok(Wls::new(design, DVector::from_element(xs.len(), 1.0))?.fit(&ys).0)
}

/// The Imbens-Kalyanaraman bandwidth for a local-linear jump at zero.
pub fn ik_bandwidth(x: &[f64], y: &[f64], c: &IkConstants) -> Result<f64> {
    check_sides(x)?;
    let n = x.len() as f64;
    // Step 1: density and conditional variances in a pilot window.
    let h1 = c.pilot * variance(x).sqrt() * n.powf(-0.2);
    let pick = |keep: &dyn Fn(f64) -> bool| -> Vec<f64> {
        x.iter().zip(y).filter(|(&a, _)| keep(a)).map(|(_, &b)| b).collect()
    };
    let y_l = pick(&|a| a < 0.0 && a >= -h1);
    let y_r = pick(&|a| a >= 0.0 && a <= h1);
    if y_l.len() < 2 || y_r.len() < 2 {
        return Err(Error::InsufficientData { left: y_l.len(), right: y_r.len(), needed: 2 });
    }
    let f0 = (y_l.len() + y_r.len()) as f64 / (2.0 * n * h1);
    let (s2_l, s2_r) = (variance(&y_l), variance(&y_r));

    // Step 2: third derivative from a global cubic with a jump, fitted
    // between the medians of the two sides.
    let lo = median(x.iter().cloned().filter(|&a| a < 0.0).collect());
    let hi = median(x.iter().cloned().filter(|&a| a >= 0.0).collect());
    let cubic = ols(x
        .iter()
        .zip(y)
        .filter(|(&a, _)| a >= lo && a <= hi)
        .map(|(&a, &b)| (vec![1.0, if a >= 0.0 { 1.0 } else { 0.0 }, a, a * a, a * a * a], b)))?;
    let m3 = 6.0 * cubic[4];

    let n_l = x.iter().filter(|&&a| a < 0.0).count() as f64;
    let n_r = n - n_l;
    let reach_l = -x.iter().cloned().fold(0.0, f64::min);
    let reach_r = x.iter().cloned().fold(0.0, f64::max);
    let h2 = |s2: f64, count: f64, reach: f64| {
        let h = c.curvature * (s2 / (f0 * m3 * m3)).powf(1.0 / 7.0) * count.powf(-1.0 / 7.0);
        if h.is_finite() {
            h.min(reach)
        } else {
            reach
        }
    };
    let (h2_l, h2_r) = (h2(s2_l, n_l, reach_l), h2(s2_r, n_r, reach_r));

    // Step 3: second derivatives from local quadratics on each side.
    let quad = |keep: &dyn Fn(f64) -> bool| -> Result<(f64, f64)> {
        let rows: Vec<_> = x.iter().zip(y).filter(|(&a, _)| keep(a)).map(|(&a, &b)| (vec![1.0, a, a * a], b)).collect();
        let count = rows.len() as f64;
        let beta = ols(rows.into_iter())?;
        Ok((2.0 * beta[2], count))
    };
    let (m2_l, n2_l) = quad(&|a| a < 0.0 && a >= -h2_l)?;
    let (m2_r, n2_r) = quad(&|a| a >= 0.0 && a <= h2_r)?;

    // Step 4: regularised plug-in.
    let r_l = c.regularization * s2_l / (n2_l * h2_l.powi(4));
    let r_r = c.regularization * s2_r / (n2_r * h2_r.powi(4));
    let dm = m2_r - m2_l;
    let h = c.kernel * ((s2_l + s2_r) / (f0 * (dm * dm + r_l + r_r))).powf(0.2) * n.powf(-0.2);
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::SingularDesign);
    }
    Ok(h)
}

/// Convenience wrapper: the estimation sample for one outcome.
pub fn sample_for(panel: &Panel, outcome: OutcomeSpec, lag: u32) -> Result<Sample> {
    build_sample(panel, &[outcome], lag)
}
