//! On-disk JSON formats.
//!
//! Two documented schemas tie the CLI stages together:
//!
//! * **Approximation file** (`pwlopt/approx/v1`): the function description,
//!   run settings, the sewn piecewise-linear approximation (breakpoints,
//!   node values, per-segment fits), the balancing telemetry, and the error
//!   bounds. Written by `approx`, consumed by `build-net` and `plot-data`.
//! * **Network file** (`pwlopt/network/v1`): `{schema, architecture, meta,
//!   layers}` with row-major weight matrices and explicit dimensions per
//!   layer, plus the original function description so evaluation tooling can
//!   report residuals. Written by `build-net`, consumed by `eval-net`.
//!
//! Serialization uses shortest-round-trip decimal for floats, so binary64
//! values survive a save/load cycle bit-for-bit, and field order is fixed,
//! so identical inputs produce byte-identical files.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::balancer::{BalanceReport, PwlApproximation};
use crate::bounds::BoundsReport;
use crate::error::{Error, Result};
use crate::functions::{builtin, Convexity, Interval, TargetFunction};
use crate::relu::ReluNetwork;

pub const APPROX_SCHEMA: &str = "pwlopt/approx/v1";
pub const NETWORK_SCHEMA: &str = "pwlopt/network/v1";

/// How a target function was specified; enough to reconstruct it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionSource {
    Builtin(String),
    Expression(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionSpec {
    pub source: FunctionSource,
    pub domain: Interval,
    pub relaxed_convexity: bool,
}

impl FunctionSpec {
    /// Rebuilds the target function (domain applied, convexity not re-checked).
    pub fn resolve(&self) -> Result<TargetFunction> {
        match &self.source {
            FunctionSource::Builtin(name) => Ok(builtin(name)?.with_domain(self.domain)),
            FunctionSource::Expression(src) => TargetFunction::from_expression(src, self.domain),
        }
    }

    pub fn convexity_mode(&self) -> Convexity {
        if self.relaxed_convexity {
            Convexity::BoundaryRelaxed
        } else {
            Convexity::Strict
        }
    }
}

/// Settings echoed into the approximation file for reproducibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub n: usize,
    pub stepsize: f64,
    pub max_rounds: usize,
    pub tol: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxFile {
    pub schema: String,
    pub function: FunctionSpec,
    pub settings: RunSettings,
    pub approximation: PwlApproximation,
    pub report: BalanceReport,
    pub bounds: BoundsReport,
}

impl ApproxFile {
    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file: ApproxFile = read_json(path)?;
        if file.schema != APPROX_SCHEMA {
            return Err(Error::Schema(format!(
                "expected schema `{APPROX_SCHEMA}`, found `{}`",
                file.schema
            )));
        }
        Ok(file)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkFile {
    pub schema: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub function: Option<FunctionSpec>,
    #[serde(flatten)]
    pub network: ReluNetwork,
}

impl NetworkFile {
    pub fn new(network: ReluNetwork, function: Option<FunctionSpec>) -> Self {
        NetworkFile {
            schema: NETWORK_SCHEMA.to_owned(),
            function,
            network,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file: NetworkFile = read_json(path)?;
        if file.schema != NETWORK_SCHEMA {
            return Err(Error::Schema(format!(
                "expected schema `{NETWORK_SCHEMA}`, found `{}`",
                file.schema
            )));
        }
        file.network.validate()?;
        Ok(file)
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(Error::from)
}
