//! Optimal line-segment approximation on a sub-interval.
//!
//! For a strictly convex `f` on `[a, b]` the minimax line is determined by
//! two characteristic abscissas: `c`, where `f'` equals the chord slope, and
//! `d`, where `f'` equals the secant slope from `a` to `c`. Both are unique
//! roots of strictly increasing functions and are found by bisection. The
//! optimal error has the closed form `(c - a) / 2 * (f'(c) - f'(d))`; the
//! grid-scan [`segment_error_oracle`] exists to check that closed form in
//! tests and is never used on production paths.
//!
//! All functions here are pure and safe to call from many threads.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::{Interval, TargetFunction};

/// Intervals narrower than this are treated as degenerate points; the fit
/// reports zero error rather than failing mid-sweep.
const DEGENERATE_WIDTH: f64 = 1e-15;

const MAX_BISECT_ITERS: usize = 200;

/// The optimal line segment on one sub-interval.
///
/// Residuals `f - S` equioscillate: `+error` at both interval endpoints and
/// `-error` at the interior point `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentFit {
    pub interval: Interval,
    pub slope: f64,
    pub intercept: f64,
    /// Interior abscissa where `f'` equals the chord slope.
    pub c: f64,
    /// Abscissa in `(lo, c)` where `f'` equals the secant slope over `[lo, c]`.
    pub d: f64,
    /// Minimax approximation error of this segment; nonnegative.
    pub error: f64,
}

impl SegmentFit {
    /// Value of the fitted line at `x`.
    pub fn evaluate(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

/// Bisection for the unique root of the increasing function `g` on
/// `[lo, hi]`, assuming `g(lo) <= 0 <= g(hi)`. Stops once the bracket is no
/// wider than `tol` or cannot shrink further.
fn bisect_increasing(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    for _ in 0..MAX_BISECT_ITERS {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Computes the optimal segment for `f` on `iv`.
///
/// `tol` is the abscissa tolerance for the roots `c` and `d`.
pub fn fit_segment(f: &TargetFunction, iv: Interval, tol: f64) -> Result<SegmentFit> {
    if !f.domain().encloses(&iv) {
        return Err(Error::DomainError(format!(
            "interval [{}, {}] lies outside the function domain [{}, {}]",
            iv.lo(),
            iv.hi(),
            f.domain().lo(),
            f.domain().hi()
        )));
    }
    if tol <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let (a, b) = (iv.lo(), iv.hi());

    if iv.width() < DEGENERATE_WIDTH {
        let slope = f.d1(a);
        let mid = iv.midpoint();
        return Ok(SegmentFit {
            interval: iv,
            slope,
            intercept: f.eval(a) - slope * a,
            c: mid,
            d: mid,
            error: 0.0,
        });
    }

    let (fa, fb) = (f.eval(a), f.eval(b));
    let slope = (fb - fa) / (b - a);
    if !slope.is_finite() {
        return Err(Error::NonFinite { x: a });
    }

    // c: f'(c) = chord slope. Strict convexity makes f' - slope increasing
    // with a sign change inside (a, b).
    let c = root_of_slope(f, a, b, slope, tol)?;

    // d: f'(d) = secant slope over [a, c]; lies strictly inside (a, c).
    let slope_ac = (f.eval(c) - fa) / (c - a);
    let d = root_of_slope(f, a, c, slope_ac, tol)?;

    let intercept = 0.5 * (fa + f.eval(c)) - 0.5 * (a + c) * slope;
    let error = (0.5 * (c - a) * (f.d1(c) - f.d1(d))).max(0.0);
    if !error.is_finite() || !intercept.is_finite() {
        return Err(Error::NonFinite { x: c });
    }

    Ok(SegmentFit {
        interval: iv,
        slope,
        intercept,
        c,
        d,
        error,
    })
}

fn root_of_slope(f: &TargetFunction, lo: f64, hi: f64, target: f64, tol: f64) -> Result<f64> {
    let g = |x: f64| f.d1(x) - target;
    let (glo, ghi) = (g(lo), g(hi));
    if !glo.is_finite() || !ghi.is_finite() {
        return Err(Error::NonFinite { x: lo });
    }
    if glo >= 0.0 || ghi <= 0.0 {
        return Err(Error::ConvexityViolation {
            lo,
            hi,
            detail: format!(
                "f' - {target} does not change sign over the interval \
                 (f'({lo}) - t = {glo}, f'({hi}) - t = {ghi}); f' must be strictly increasing"
            ),
        });
    }
    Ok(bisect_increasing(g, lo, hi, tol))
}

/// Like [`fit_segment`] but returns only the optimal error. This is the
/// balancing sweep's inner-loop workhorse.
pub fn error_of_interval(f: &TargetFunction, iv: Interval, tol: f64) -> Result<f64> {
    Ok(fit_segment(f, iv, tol)?.error)
}

/// Brute-force check of the closed-form error: the maximum of
/// `|f(x) - S(x)|` over a uniform grid (endpoints included).
pub fn segment_error_oracle(f: &TargetFunction, s: &SegmentFit, grid: usize) -> f64 {
    assert!(grid >= 1000, "oracle grid must have at least 1000 points");
    s.interval
        .grid(grid)
        .map(|x| (f.eval(x) - s.evaluate(x)).abs())
        .fold(0.0, f64::max)
}
