//! Breakpoint balancing: the iterative search for the optimal n-segment
//! approximation.
//!
//! The optimality condition is equal per-segment minimax errors. Starting
//! from any strictly increasing partition, each round sweeps the interior
//! breakpoints left to right; for every adjacent pair the shared breakpoint
//! is nudged by `stepsize` toward the segment with the larger error until
//! the pair flips order. Rounds repeat while the max-min error gap keeps
//! strictly decreasing (or until the gap is negligible, or a safety cap is
//! hit). Shrinking an interval strictly shrinks its optimal error, which is
//! what drives every individual move in the right direction.
//!
//! A single run is inherently sequential; independent runs share no state
//! and may execute concurrently.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::{Interval, TargetFunction};
use crate::segment::{fit_segment, SegmentFit};

/// Strictly increasing breakpoints `x_0 < x_1 < ... < x_n` covering a domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    breakpoints: Vec<f64>,
}

impl Partition {
    /// Validates and wraps an explicit breakpoint list.
    pub fn new(breakpoints: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::InvalidArgument(
                "a partition needs at least two breakpoints".into(),
            ));
        }
        if breakpoints.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(
                "partition breakpoints must be finite".into(),
            ));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "partition breakpoints must be strictly increasing".into(),
            ));
        }
        Ok(Partition { breakpoints })
    }

    /// `n + 1` evenly spaced breakpoints over `domain`. The endpoints are the
    /// domain bounds exactly.
    pub fn uniform(domain: Interval, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "segment count must be at least 1".into(),
            ));
        }
        let (lo, hi) = (domain.lo(), domain.hi());
        let width = domain.width();
        let breakpoints = (0..=n)
            .map(|i| match i {
                0 => lo,
                i if i == n => hi,
                i => lo + width * i as f64 / n as f64,
            })
            .collect();
        Partition::new(breakpoints)
    }

    /// A seeded random strictly increasing partition, used to demonstrate
    /// that balancing converges to the same optimum from any start.
    pub fn random(domain: Interval, n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "segment count must be at least 1".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let min_gap = domain.width() / (10.0 * n as f64);
        loop {
            let mut interior: Vec<f64> = (0..n - 1)
                .map(|_| rng.random_range(domain.lo()..domain.hi()))
                .collect();
            interior.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
            let mut pts = Vec::with_capacity(n + 1);
            pts.push(domain.lo());
            pts.extend(interior);
            pts.push(domain.hi());
            if pts.windows(2).all(|w| w[1] - w[0] >= min_gap) {
                return Partition::new(pts);
            }
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Number of segments (one less than the number of breakpoints).
    pub fn segment_count(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn interval(&self, i: usize) -> Interval {
        Interval::new(self.breakpoints[i], self.breakpoints[i + 1])
            .expect("partition is strictly increasing")
    }
}

/// A continuous piecewise-linear approximation: per-segment optimal fits plus
/// the node values obtained by sewing adjacent fits together at shared
/// breakpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPwl")]
pub struct PwlApproximation {
    breakpoints: Vec<f64>,
    segments: Vec<SegmentFit>,
    node_values: Vec<f64>,
    max_sew_gap: f64,
}

#[derive(Deserialize)]
struct RawPwl {
    breakpoints: Vec<f64>,
    segments: Vec<SegmentFit>,
    node_values: Vec<f64>,
    max_sew_gap: f64,
}

impl TryFrom<RawPwl> for PwlApproximation {
    type Error = Error;
    fn try_from(raw: RawPwl) -> Result<Self> {
        let n = raw.segments.len();
        if n == 0 || raw.breakpoints.len() != n + 1 || raw.node_values.len() != n + 1 {
            return Err(Error::Schema(
                "piecewise-linear data has inconsistent lengths".into(),
            ));
        }
        Partition::new(raw.breakpoints.clone())?;
        for (i, s) in raw.segments.iter().enumerate() {
            if s.interval.lo() != raw.breakpoints[i] || s.interval.hi() != raw.breakpoints[i + 1] {
                return Err(Error::Schema(format!(
                    "segment {i} does not match its breakpoints"
                )));
            }
        }
        if !raw.max_sew_gap.is_finite() || raw.max_sew_gap < 0.0 {
            return Err(Error::Schema("max_sew_gap must be nonnegative".into()));
        }
        Ok(PwlApproximation {
            breakpoints: raw.breakpoints,
            segments: raw.segments,
            node_values: raw.node_values,
            max_sew_gap: raw.max_sew_gap,
        })
    }
}

impl PwlApproximation {
    /// Sews contiguous raw fits into a continuous function. At each interior
    /// breakpoint the node value is the mean of the two adjacent segment
    /// values; the largest left/right discrepancy is recorded as
    /// `max_sew_gap`. Endpoints take their single segment's value.
    pub fn sew(raw: Vec<SegmentFit>) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::InvalidArgument("no segments to sew".into()));
        }
        for w in raw.windows(2) {
            if w[0].interval.hi() != w[1].interval.lo() {
                return Err(Error::InvalidArgument(format!(
                    "segments are not contiguous at {}",
                    w[0].interval.hi()
                )));
            }
        }
        let n = raw.len();
        let mut breakpoints = Vec::with_capacity(n + 1);
        breakpoints.extend(raw.iter().map(|s| s.interval.lo()));
        breakpoints.push(raw[n - 1].interval.hi());

        let mut node_values = Vec::with_capacity(n + 1);
        let mut max_sew_gap = 0.0_f64;
        node_values.push(raw[0].evaluate(breakpoints[0]));
        for j in 1..n {
            let x = breakpoints[j];
            let left = raw[j - 1].evaluate(x);
            let right = raw[j].evaluate(x);
            max_sew_gap = max_sew_gap.max((left - right).abs());
            node_values.push(0.5 * (left + right));
        }
        node_values.push(raw[n - 1].evaluate(breakpoints[n]));

        Ok(PwlApproximation {
            breakpoints,
            segments: raw,
            node_values,
            max_sew_gap,
        })
    }

    pub fn segments(&self) -> &[SegmentFit] {
        &self.segments
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn node_values(&self) -> &[f64] {
        &self.node_values
    }

    pub fn max_sew_gap(&self) -> f64 {
        self.max_sew_gap
    }

    pub fn segment_count(&self) -> usize {
        self.segments.len()
    }

    pub fn domain(&self) -> Interval {
        Interval::new(
            self.breakpoints[0],
            *self.breakpoints.last().expect("nonempty"),
        )
        .expect("breakpoints are strictly increasing")
    }

    /// Slope of the sewn function on segment `i` (from node values, not from
    /// the raw fit; the two differ by at most the sew gap over the width).
    pub fn node_slope(&self, i: usize) -> f64 {
        (self.node_values[i + 1] - self.node_values[i])
            / (self.breakpoints[i + 1] - self.breakpoints[i])
    }

    /// Evaluates the sewn piecewise-linear function. Outside the domain the
    /// value is clamped to the nearest endpoint's node value, mirroring how
    /// the compiled networks saturate.
    pub fn evaluate(&self, x: f64) -> f64 {
        let n = self.segment_count();
        if x <= self.breakpoints[0] {
            return self.node_values[0];
        }
        if x >= self.breakpoints[n] {
            return self.node_values[n];
        }
        // partition_point returns the first breakpoint > x; the segment index
        // is one less.
        let i = self.breakpoints.partition_point(|&b| b <= x) - 1;
        let i = i.min(n - 1);
        self.node_values[i] + self.node_slope(i) * (x - self.breakpoints[i])
    }
}

/// Telemetry from one balancing run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    /// Completed sweep rounds.
    pub rounds: usize,
    /// Max-min segment error gap recorded after each round.
    pub per_round_gap: Vec<f64>,
    /// Per-segment optimal errors at termination.
    pub final_errors: Vec<f64>,
    /// Arithmetic mean of `final_errors`.
    pub mean_error: f64,
    /// True when the run stopped because the gap was negligible or stopped
    /// strictly decreasing; false when the round cap was hit first.
    pub converged: bool,
}

/// Knobs for [`balance`]; the defaults match the reference experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BalanceSettings {
    /// Breakpoint move granularity.
    pub stepsize: f64,
    /// Safety cap on rounds.
    pub max_rounds: usize,
    /// Abscissa tolerance passed through to the segment fitter.
    pub fit_tol: f64,
}

impl Default for BalanceSettings {
    fn default() -> Self {
        BalanceSettings {
            stepsize: 1e-5,
            max_rounds: 200_000,
            fit_tol: 1e-12,
        }
    }
}

/// Gaps at or below this are considered fully balanced.
const GAP_FLOOR: f64 = 1e-12;

/// Balances `n` segments over the whole domain of `f`, starting from the
/// uniform partition.
pub fn balance(
    f: &TargetFunction,
    n: usize,
    settings: &BalanceSettings,
) -> Result<(PwlApproximation, BalanceReport)> {
    balance_from(f, Partition::uniform(f.domain(), n)?, settings)
}

/// Balances starting from an arbitrary partition of the domain.
pub fn balance_from(
    f: &TargetFunction,
    partition: Partition,
    settings: &BalanceSettings,
) -> Result<(PwlApproximation, BalanceReport)> {
    if settings.stepsize <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "stepsize must be positive, got {}",
            settings.stepsize
        )));
    }
    let bp = partition.breakpoints();
    if bp[0] != f.domain().lo() || bp[bp.len() - 1] != f.domain().hi() {
        return Err(Error::DomainError(
            "partition endpoints must coincide with the function domain".into(),
        ));
    }

    let n = partition.segment_count();
    let step = settings.stepsize;
    // A breakpoint may never come closer than this to its neighbors.
    let guard = 10.0 * step;
    let mut xs = partition.breakpoints().to_vec();

    let refit = |xs: &[f64], i: usize| -> Result<SegmentFit> {
        let iv = Interval::new(xs[i], xs[i + 1]).expect("breakpoints stay ordered");
        fit_segment(f, iv, settings.fit_tol)
    };

    let mut fits: Vec<SegmentFit> = (0..n).map(|i| refit(&xs, i)).collect::<Result<_>>()?;

    let mut per_round_gap = Vec::new();
    let mut prev_gap = f64::INFINITY;
    let mut converged = false;
    let mut rounds = 0;

    loop {
        rounds += 1;
        for i in 0..n.saturating_sub(1) {
            // Shared breakpoint of segments i and i+1 is xs[i+1]. Move it
            // toward the larger error until the pair flips (or the move
            // would violate the neighbor guard).
            if fits[i].error > fits[i + 1].error {
                while fits[i].error > fits[i + 1].error {
                    let target = xs[i + 1] - step;
                    if target - xs[i] < guard {
                        break;
                    }
                    xs[i + 1] = target;
                    fits[i] = refit(&xs, i)?;
                    fits[i + 1] = refit(&xs, i + 1)?;
                }
            } else if fits[i].error < fits[i + 1].error {
                while fits[i].error < fits[i + 1].error {
                    let target = xs[i + 1] + step;
                    if xs[i + 2] - target < guard {
                        break;
                    }
                    xs[i + 1] = target;
                    fits[i] = refit(&xs, i)?;
                    fits[i + 1] = refit(&xs, i + 1)?;
                }
            }
        }

        let max = fits
            .iter()
            .map(|s| s.error)
            .fold(f64::NEG_INFINITY, f64::max);
        let min = fits.iter().map(|s| s.error).fold(f64::INFINITY, f64::min);
        let gap = max - min;
        per_round_gap.push(gap);

        if gap <= GAP_FLOOR {
            converged = true;
            break;
        }
        if gap >= prev_gap {
            // The round failed to strictly improve the balance.
            converged = true;
            break;
        }
        if rounds >= settings.max_rounds {
            break;
        }
        prev_gap = gap;
    }

    let final_errors: Vec<f64> = fits.iter().map(|s| s.error).collect();
    let mean_error = final_errors.iter().sum::<f64>() / n as f64;
    let report = BalanceReport {
        rounds,
        per_round_gap,
        final_errors,
        mean_error,
        converged,
    };
    Ok((PwlApproximation::sew(fits)?, report))
}

/// True when the segment errors are mutually equal within `tol` and every
/// segment satisfies the equioscillation signature of a true optimum
/// (residual `f - S` equal to `+error` at the interval ends and `-error`
/// at the interior point `c`).
pub fn optimality_check(f: &TargetFunction, pwl: &PwlApproximation, tol: f64) -> bool {
    let errors: Vec<f64> = pwl.segments().iter().map(|s| s.error).collect();
    let max = errors.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = errors.iter().cloned().fold(f64::INFINITY, f64::min);
    if max - min > tol {
        return false;
    }
    pwl.segments().iter().all(|s| {
        let res = |x: f64| f.eval(x) - s.evaluate(x);
        let allow = 1e-9 * s.error.max(1.0);
        (res(s.interval.lo()) - s.error).abs() <= allow
            && (res(s.c) + s.error).abs() <= allow
            && (res(s.interval.hi()) - s.error).abs() <= allow
    })
}
