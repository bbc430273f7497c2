//! Closed-form error bounds for the optimal n-segment approximation.
//!
//! The optimal error is sandwiched between `(b-a)^2 * min f'' / (16 n^2)` and
//! `(b-a)^2 * max f'' / (16 n^2)`; both collapse to the exact error when
//! `f''` is constant. The same bounds re-expressed in network size follow
//! from substituting the neuron count of the fixed-depth architecture.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::TargetFunction;

/// Grid resolution for estimating `f''` extrema of expression-defined
/// functions. Built-ins use exact endpoint values instead.
pub const EXTREMA_GRID: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub n: usize,
    pub lower: f64,
    pub upper: f64,
    pub f2_min: f64,
    pub f2_max: f64,
}

/// `(min, max)` of `f''` over the domain: exact for built-ins (their second
/// derivatives are monotone, so the extrema sit at the endpoints), otherwise
/// estimated on a uniform grid of at least 1024 points.
pub fn second_derivative_extrema(f: &TargetFunction, grid: usize) -> Result<(f64, f64)> {
    if let Some(exact) = f.d2_extrema_exact(f.domain()) {
        return Ok(exact);
    }
    if grid < 1024 {
        return Err(Error::InvalidArgument(format!(
            "extrema grid must have at least 1024 points, got {grid}"
        )));
    }
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for x in f.domain().grid(grid) {
        let v = f.d2(x);
        if !v.is_finite() {
            return Err(Error::NonFinite { x });
        }
        min = min.min(v);
        max = max.max(v);
    }
    Ok((min, max))
}

/// Lower and upper bounds on the optimal error with `n` segments.
pub fn error_bounds(f: &TargetFunction, n: usize) -> Result<BoundsReport> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "segment count must be at least 1".into(),
        ));
    }
    let (f2_min, f2_max) = second_derivative_extrema(f, EXTREMA_GRID)?;
    let w2 = f.domain().width().powi(2);
    let nn = (n * n) as f64;
    Ok(BoundsReport {
        n,
        lower: w2 * f2_min / (16.0 * nn),
        upper: w2 * f2_max / (16.0 * nn),
        f2_min,
        f2_max,
    })
}

/// `(lower, upper)` bounds on the optimal error achievable by a ReLU network
/// of `neurons` neurons and `layers` layers (input and output included).
///
/// The upper bound assumes the fixed-depth construction (3 hidden neurons
/// per segment); the lower bound uses the generic cap on the number of
/// linear pieces a network of that size can produce, and is deliberately
/// loose for deep networks.
pub fn size_bounds(f: &TargetFunction, neurons: usize, layers: usize) -> Result<(f64, f64)> {
    if neurons < 3 || layers < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 neurons and 3 layers, got {neurons} and {layers}"
        )));
    }
    let (f2_min, f2_max) = second_derivative_extrema(f, EXTREMA_GRID)?;
    let w2 = f.domain().width().powi(2);
    let n = neurons as f64;
    let upper = 9.0 * w2 * f2_max / (16.0 * n * n);
    let exponent = 2 * layers as i32 - 4;
    let lower = w2 * f2_min / (16.0 * 2.0_f64.powi(exponent) * n.powi(exponent));
    Ok((lower, upper))
}

/// Certifies the quadratic convergence rate from measured `(n, mean_error)`
/// pairs: returns `max(error * n^2) / min(error * n^2)`. A ratio close to
/// `max f'' / min f''` (and exactly 1 for constant curvature) confirms the
/// errors scale as `1/n^2`.
pub fn rate_check(errors: &[(usize, f64)]) -> Result<f64> {
    if errors.len() < 2 {
        return Err(Error::InvalidArgument(
            "rate check needs at least two (n, error) entries".into(),
        ));
    }
    for (i, (n, e)) in errors.iter().enumerate() {
        if *n == 0 || !e.is_finite() || *e <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "degenerate entry {i}: n = {n}, error = {e}"
            )));
        }
        if errors[..i].iter().any(|(m, _)| m == n) {
            return Err(Error::InvalidArgument(format!(
                "duplicate segment count n = {n}"
            )));
        }
    }
    let scaled: Vec<f64> = errors.iter().map(|(n, e)| e * (n * n) as f64).collect();
    let max = scaled.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(max / min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::{builtin, Interval, TargetFunction};
    use std::f64::consts::E;

    #[test]
    fn extrema_of_builtins() {
        let f = builtin("exp").unwrap();
        let (lo, hi) = second_derivative_extrema(&f, EXTREMA_GRID).unwrap();
        assert_eq!((lo, hi), (1.0, E));

        let f = builtin("square").unwrap();
        assert_eq!(
            second_derivative_extrema(&f, EXTREMA_GRID).unwrap(),
            (2.0, 2.0)
        );

        let f = builtin("cube").unwrap();
        assert_eq!(
            second_derivative_extrema(&f, EXTREMA_GRID).unwrap(),
            (0.0, 6.0)
        );
    }

    #[test]
    fn extrema_of_expression_on_grid() {
        let dom = Interval::new(0.0, 1.0).unwrap();
        let f = TargetFunction::from_expression("exp(x)", dom).unwrap();
        let (lo, hi) = second_derivative_extrema(&f, EXTREMA_GRID).unwrap();
        assert!((lo - 1.0).abs() < 1e-12);
        assert!((hi - E).abs() < 1e-12);
        assert!(second_derivative_extrema(&f, 1023).is_err());
    }

    #[test]
    fn bounds_for_exp_two_segments() {
        let f = builtin("exp").unwrap();
        let b = error_bounds(&f, 2).unwrap();
        assert!((b.lower - 0.015625).abs() < 1e-12);
        assert!((b.upper - E / 64.0).abs() < 1e-12);
        assert!((b.upper - 0.042473).abs() < 1e-5);
    }

    #[test]
    fn bounds_collapse_for_constant_curvature() {
        let f = builtin("square").unwrap();
        let b = error_bounds(&f, 5).unwrap();
        assert_eq!(b.lower, b.upper);
        assert!((b.lower - 0.02).abs() < 1e-15);
    }

    #[test]
    fn cube_lower_bound_is_zero() {
        let f = builtin("cube").unwrap();
        let b = error_bounds(&f, 2).unwrap();
        assert_eq!(b.lower, 0.0);
        assert!((b.upper - 0.09375).abs() < 1e-15);
    }

    #[test]
    fn bounds_scale_quadratically() {
        let f = builtin("exp").unwrap();
        for n in [1usize, 2, 3, 7] {
            let b1 = error_bounds(&f, n).unwrap();
            let b2 = error_bounds(&f, 2 * n).unwrap();
            assert_eq!(b2.upper, b1.upper / 4.0);
            assert_eq!(b2.lower, b1.lower / 4.0);
        }
    }

    #[test]
    fn size_upper_bound_matches_segment_bound_at_3n() {
        let f = builtin("square").unwrap();
        let (_, upper) = size_bounds(&f, 6, 4).unwrap();
        assert_eq!(upper, 0.125);
        assert_eq!(upper, error_bounds(&f, 2).unwrap().upper);

        let f = builtin("exp").unwrap();
        let (_, upper) = size_bounds(&f, 30, 4).unwrap();
        assert!((upper - E / 1600.0).abs() < 1e-15);
        assert_eq!(upper, error_bounds(&f, 10).unwrap().upper);
    }

    #[test]
    fn size_lower_bound_example() {
        let f = builtin("square").unwrap();
        let (lower, _) = size_bounds(&f, 3, 3).unwrap();
        assert!((lower - 1.0 / 72.0).abs() < 1e-15);
    }

    #[test]
    fn size_bounds_preconditions() {
        let f = builtin("square").unwrap();
        assert!(size_bounds(&f, 2, 3).is_err());
        assert!(size_bounds(&f, 3, 2).is_err());
    }

    #[test]
    fn rate_check_reference_values() {
        let ratio = rate_check(&[(2, 0.125), (3, 0.05556), (5, 0.02), (10, 0.005)]).unwrap();
        assert!((ratio - 1.0).abs() < 1e-3);

        let ratio = rate_check(&[(2, 0.02635), (10, 0.00105)]).unwrap();
        assert!((ratio - 1.0038).abs() < 1e-3);
    }

    #[test]
    fn rate_check_exact_quadratic_family() {
        let entries: Vec<(usize, f64)> = (1..6).map(|k| (k, 0.7 / (k * k) as f64)).collect();
        assert_eq!(rate_check(&entries).unwrap(), 1.0);
    }

    #[test]
    fn rate_check_rejects_degenerate_input() {
        assert!(rate_check(&[]).is_err());
        assert!(rate_check(&[(2, 0.1)]).is_err());
        assert!(rate_check(&[(2, 0.1), (2, 0.2)]).is_err());
        assert!(rate_check(&[(2, 0.1), (3, 0.0)]).is_err());
    }
}
