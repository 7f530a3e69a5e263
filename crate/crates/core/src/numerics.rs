//! Small scalar numerical routines shared by the solvers.
//!
//! Everything here works on plain `f64` closures. The root finder and the
//! maximiser are deliberately simple bracketing methods: the functions they
//! are applied to are monotone (first-order conditions) or unimodal on the
//! bracket (district objectives), and bracketing gives hard guarantees that
//! Newton-type methods would not.

/// Root of a strictly increasing function on `[lo, hi]`.
///
/// `f(lo) < 0 < f(hi)` is assumed but not required: if the signs do not
/// straddle zero the nearer endpoint is returned. Bisection runs until the
/// bracket is narrower than `tol`; a final regula-falsi step across the last
/// bracket makes the result a smooth function of the problem data, which
/// matters when the root feeds an outer maximiser.
pub fn bisect_increasing<F>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64
where
    F: FnMut(f64) -> f64,
{
    debug_assert!(lo <= hi);
    let mut f_lo = f(lo);
    let mut f_hi = f(hi);
    if f_lo >= 0.0 {
        return lo;
    }
    if f_hi <= 0.0 {
        return hi;
    }
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if f_mid < 0.0 {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
    if f_lo.is_finite() && f_hi.is_finite() && f_hi > f_lo {
        let t = -f_lo / (f_hi - f_lo);
        lo + t * (hi - lo)
    } else {
        0.5 * (lo + hi)
    }
}

/// Grows `hi` geometrically until `f(hi) > 0` for an increasing `f`.
///
/// Returns `None` if no sign change is found within `max_doublings`.
pub fn expand_upper<F>(mut f: F, lo: f64, mut step: f64, max_doublings: usize) -> Option<f64>
where
    F: FnMut(f64) -> f64,
{
    for _ in 0..max_doublings {
        let hi = lo + step;
        if f(hi) > 0.0 {
            return Some(hi);
        }
        step *= 2.0;
    }
    None
}

/// Result of a one-dimensional maximisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub x: f64,
    pub value: f64,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the maximum of `f` on `[lo, hi]`.
///
/// Non-finite values are treated as `-inf`. The endpoints are evaluated as
/// well so a boundary optimum is returned exactly.
pub fn golden_section_max<F>(f: &mut F, lo: f64, hi: f64, tol: f64) -> Maximum
where
    F: FnMut(f64) -> f64,
{
    let mut eval = |x: f64| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::NEG_INFINITY
        }
    };
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = eval(c);
    let mut fd = eval(d);
    while (b - a) > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = eval(d);
        }
    }
    let mid = 0.5 * (a + b);
    let mut best = Maximum { x: mid, value: eval(mid) };
    for (x, v) in [(c, fc), (d, fd)] {
        if v > best.value {
            best = Maximum { x, value: v };
        }
    }
    for x in [lo, hi] {
        let v = eval(x);
        if v > best.value {
            best = Maximum { x, value: v };
        }
    }
    best
}

/// Golden-section search restarted on `starts` equal sub-brackets of
/// `[lo, hi]`. Ties (within `1e-12` relative) go to the smallest maximiser.
pub fn multistart_golden_max<F>(f: &mut F, lo: f64, hi: f64, starts: usize, tol: f64) -> Maximum
where
    F: FnMut(f64) -> f64,
{
    let starts = starts.max(1);
    let width = (hi - lo) / starts as f64;
    let mut best: Option<Maximum> = None;
    for k in 0..starts {
        let a = lo + width * k as f64;
        let b = if k + 1 == starts { hi } else { a + width };
        let cand = golden_section_max(f, a, b, tol);
        best = match best {
            None => Some(cand),
            Some(cur) => {
                let scale = cur.value.abs().max(cand.value.abs()).max(1.0);
                let better = cand.value > cur.value + 1e-12 * scale;
                let tie_left = (cand.value - cur.value).abs() <= 1e-12 * scale && cand.x < cur.x;
                if better || tie_left {
                    Some(cand)
                } else {
                    Some(cur)
                }
            }
        };
    }
    best.expect("at least one start")
}

/// Eight-point Gauss-Legendre rule on `[-1, 1]`; `(node, weight)`.
pub const GAUSS_LEGENDRE_8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
];

/// Integral of `f` over `[a, b]` by the eight-point rule.
pub fn gauss_legendre<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    GAUSS_LEGENDRE_8.iter().map(|&(x, w)| w * f(mid + half * x)).sum::<f64>() * half
}

/// One classical fourth-order Runge-Kutta step for `y' = f(x, y)`.
pub fn rk4_step<F: FnMut(f64, f64) -> f64>(f: &mut F, x: f64, y: f64, h: f64) -> f64 {
    let k1 = f(x, y);
    let k2 = f(x + 0.5 * h, y + 0.5 * h * k1);
    let k3 = f(x + 0.5 * h, y + 0.5 * h * k2);
    let k4 = f(x + h, y + h * k3);
    y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Cubic Hermite interpolation between `(x0, y0, d0)` and `(x1, y1, d1)`.
pub fn hermite(x0: f64, y0: f64, d0: f64, x1: f64, y1: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    if h == 0.0 {
        return y0;
    }
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
}
