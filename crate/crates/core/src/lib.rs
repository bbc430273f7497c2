//! Optimal minimax piecewise-linear approximation of strictly convex
//! univariate functions, and compilation of the result into explicit ReLU
//! network weights.
//!
//! The pipeline has three stages:
//!
//! 1. [`segment`] fits the unique best line segment on a sub-interval (the
//!    equioscillation optimum, in closed form up to one root-find).
//! 2. [`balancer`] sweeps interior breakpoints until all segments carry the
//!    same optimal error, which characterizes the best n-segment
//!    approximation; [`bounds`] provides the matching closed-form error
//!    bounds.
//! 3. [`relu`] compiles the resulting continuous piecewise-linear function
//!    into dense ReLU layers under a fixed-depth and a fixed-width
//!    architecture.
//!
//! Target functions are either built-ins with analytic derivatives or user
//! expressions differentiated symbolically (see [`functions`]).
//!
//! ```
//! use pwlopt::{balancer, functions};
//!
//! let f = functions::builtin("square").unwrap();
//! let settings = balancer::BalanceSettings::default();
//! let (pwl, report) = balancer::balance(&f, 2, &settings).unwrap();
//! assert!((report.mean_error - 0.125).abs() < 1e-4);
//! let net = pwlopt::relu::build_fixed_depth(&pwl).unwrap();
//! assert!((net.forward(0.0) - pwl.evaluate(0.0)).abs() < 1e-12);
//! ```

pub mod balancer;
pub mod bounds;
pub mod error;
pub mod files;
pub mod functions;
pub mod relu;
pub mod segment;

pub use balancer::{BalanceReport, BalanceSettings, Partition, PwlApproximation};
pub use bounds::BoundsReport;
pub use error::{Error, Result};
pub use functions::{Convexity, Expression, Interval, TargetFunction};
pub use relu::{Architecture, Layer, ReluNetwork};
pub use segment::SegmentFit;
