//! Strictly convex target functions on a finite interval.
//!
//! Built-ins (`exp`, `square`, `cube`) carry exact analytic first and second
//! derivatives. Arbitrary functions are supplied as expression text; their
//! derivatives are produced symbolically so downstream root finding sees
//! smooth, noise-free slopes rather than differencing noise.
//!
//! Everything here is immutable after construction and safe to share across
//! threads.

mod expr;

pub use expr::{differentiate, parse_expression, Expression};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite interval `[lo, hi]` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInterval")]
pub struct Interval {
    lo: f64,
    hi: f64,
}

#[derive(Deserialize)]
struct RawInterval {
    lo: f64,
    hi: f64,
}

impl TryFrom<RawInterval> for Interval {
    type Error = Error;
    fn try_from(raw: RawInterval) -> Result<Self> {
        Interval::new(raw.lo, raw.hi)
    }
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return Err(Error::DomainError(format!(
                "invalid interval [{lo}, {hi}]: bounds must be finite with lo < hi"
            )));
        }
        Ok(Interval { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn encloses(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// `count` uniformly spaced points including both endpoints. The last
    /// point is exactly `hi` (no floating-point drift).
    pub fn grid(&self, count: usize) -> impl Iterator<Item = f64> + '_ {
        assert!(count >= 2, "grid needs at least the two endpoints");
        let step = self.width() / (count - 1) as f64;
        (0..count).map(move |i| {
            if i == count - 1 {
                self.hi
            } else {
                self.lo + step * i as f64
            }
        })
    }
}

/// Convexity validation mode.
///
/// `Strict` demands `f'' > 0` at every grid point. `BoundaryRelaxed` permits
/// `f'' = 0` at the two domain endpoints (needed for targets like `x^3` on
/// `[0, 1]`, whose second derivative vanishes at the left endpoint while the
/// first derivative stays strictly increasing on the open interval).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convexity {
    Strict,
    BoundaryRelaxed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Builtin {
    Exp,
    Square,
    Cube,
}

#[derive(Debug, Clone)]
enum Kind {
    Builtin(Builtin),
    Expr {
        f: Expression,
        f1: Expression,
        f2: Expression,
    },
}

/// A scalar target function with first and second derivatives on a domain.
#[derive(Debug, Clone)]
pub struct TargetFunction {
    name: String,
    domain: Interval,
    kind: Kind,
}

impl TargetFunction {
    /// Builds a function from expression source text, deriving `f'` and
    /// `f''` symbolically.
    pub fn from_expression(src: &str, domain: Interval) -> Result<Self> {
        let f = parse_expression(src)?;
        let f1 = f.derivative();
        let f2 = f1.derivative();
        Ok(TargetFunction {
            name: src.to_owned(),
            domain,
            kind: Kind::Expr { f, f1, f2 },
        })
    }

    /// The same function restricted to (or re-hosted on) another domain.
    pub fn with_domain(&self, domain: Interval) -> Self {
        TargetFunction {
            name: self.name.clone(),
            domain,
            kind: self.kind.clone(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Builtin(Builtin::Exp) => x.exp(),
            Kind::Builtin(Builtin::Square) => x * x,
            Kind::Builtin(Builtin::Cube) => x * x * x,
            Kind::Expr { f, .. } => f.eval(x),
        }
    }

    /// First derivative `f'(x)`.
    pub fn d1(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Builtin(Builtin::Exp) => x.exp(),
            Kind::Builtin(Builtin::Square) => 2.0 * x,
            Kind::Builtin(Builtin::Cube) => 3.0 * x * x,
            Kind::Expr { f1, .. } => f1.eval(x),
        }
    }

    /// Second derivative `f''(x)`.
    pub fn d2(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Builtin(Builtin::Exp) => x.exp(),
            Kind::Builtin(Builtin::Square) => 2.0,
            Kind::Builtin(Builtin::Cube) => 6.0 * x,
            Kind::Expr { f2, .. } => f2.eval(x),
        }
    }

    /// Exact extrema of `f''` on `iv` where they are known analytically.
    ///
    /// All built-ins have monotone (or constant) second derivatives, so the
    /// extrema sit at the endpoints. Expression-defined functions return
    /// `None` and are estimated on a grid instead.
    pub fn d2_extrema_exact(&self, iv: Interval) -> Option<(f64, f64)> {
        match &self.kind {
            Kind::Builtin(_) => {
                let (a, b) = (self.d2(iv.lo()), self.d2(iv.hi()));
                Some((a.min(b), a.max(b)))
            }
            Kind::Expr { .. } => None,
        }
    }
}

/// Returns a built-in target function with its default domain:
/// `exp` on [0, 1], `square` on [-1, 1], `cube` on [0, 1].
pub fn builtin(name: &str) -> Result<TargetFunction> {
    let (kind, domain) = match name {
        "exp" => (Builtin::Exp, Interval::new(0.0, 1.0)?),
        "square" => (Builtin::Square, Interval::new(-1.0, 1.0)?),
        "cube" => (Builtin::Cube, Interval::new(0.0, 1.0)?),
        _ => return Err(Error::NotFound(name.to_owned())),
    };
    Ok(TargetFunction {
        name: name.to_owned(),
        domain,
        kind: Kind::Builtin(kind),
    })
}

/// Checks `f'' > 0` on `grid_size` uniformly spaced points of the domain,
/// endpoints included. In [`Convexity::BoundaryRelaxed`] mode the two
/// endpoints only need `f'' >= 0`.
///
/// Fails with the first violating point. Deterministic for fixed inputs.
pub fn validate_convexity(f: &TargetFunction, grid_size: usize, mode: Convexity) -> Result<()> {
    if grid_size < 64 {
        return Err(Error::InvalidArgument(format!(
            "convexity grid must have at least 64 points, got {grid_size}"
        )));
    }
    let domain = f.domain();
    for (i, x) in domain.grid(grid_size).enumerate() {
        let d2 = f.d2(x);
        if !d2.is_finite() {
            return Err(Error::NonFinite { x });
        }
        let at_boundary = i == 0 || i == grid_size - 1;
        let ok = if mode == Convexity::BoundaryRelaxed && at_boundary {
            d2 >= 0.0
        } else {
            d2 > 0.0
        };
        if !ok {
            return Err(Error::NotStrictlyConvex { x, d2 });
        }
    }
    Ok(())
}
