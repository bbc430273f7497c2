//! Compilation of a continuous piecewise-linear function into explicit ReLU
//! network weights.
//!
//! Each segment `i` with slope `k_i` over `[x_i, x_{i+1}]` is generated by
//! the unit
//!
//! ```text
//! O_i = sgn(k_i) * relu(|k_i| * (relu(x - x_i) - relu(x - x_{i+1})))
//! ```
//!
//! which is zero left of `x_i`, follows the segment inside the interval, and
//! plateaus right of `x_{i+1}`. The network output sums all units and adds
//! the leftmost node value, so it reproduces the piecewise-linear function
//! exactly on its domain and clamps to the endpoint values outside of it.
//!
//! Two layouts are produced. The fixed-depth network evaluates all units in
//! two shared hidden layers (`2n` shifted ReLUs, then `n` segment units) and
//! sums them in the output neuron: `3n` hidden neurons total. The
//! fixed-width network chains one four-layer block per segment, each of
//! width at most 5, threading the input and a running accumulator through
//! the blocks. ReLU kills negative values, so both carried channels ride on
//! a constant shift (recorded in the metadata) large enough to keep them
//! nonnegative anywhere on the domain; the output layer subtracts it again.
//!
//! Networks are immutable after construction; forward passes are pure.

use serde::{Deserialize, Serialize};

use crate::balancer::PwlApproximation;
use crate::error::{Error, Result};
use crate::functions::Interval;

/// One dense layer, row-major: `weights[row][col]`, `row < out_dim`,
/// `col < in_dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
}

impl Layer {
    pub fn dense(weights: Vec<Vec<f64>>, biases: Vec<f64>) -> Self {
        let out_dim = weights.len();
        let in_dim = weights.first().map_or(0, Vec::len);
        debug_assert!(weights.iter().all(|row| row.len() == in_dim));
        debug_assert_eq!(biases.len(), out_dim);
        Layer {
            in_dim,
            out_dim,
            weights,
            biases,
        }
    }

    fn affine(&self, input: &[f64]) -> Vec<f64> {
        assert_eq!(input.len(), self.in_dim, "layer input dimension mismatch");
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(row, b)| row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>() + b)
            .collect()
    }

    /// Dimension and shape consistency, used when loading serialized nets.
    pub fn validate(&self) -> Result<()> {
        if self.weights.len() != self.out_dim
            || self.biases.len() != self.out_dim
            || self.weights.iter().any(|row| row.len() != self.in_dim)
        {
            return Err(Error::Schema(
                "layer dimensions do not match weight matrix shape".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Architecture {
    FixedDepth,
    FixedWidth,
}

impl std::fmt::Display for Architecture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Architecture::FixedDepth => write!(f, "fixed-depth"),
            Architecture::FixedWidth => write!(f, "fixed-width"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkMeta {
    pub n_segments: usize,
    /// Total neurons in hidden layers (input and output not counted).
    pub hidden_neurons: usize,
    /// Total layer count, input and output included.
    pub depth: usize,
    /// Domain the source approximation covers; forward passes clamp
    /// outside it.
    pub domain: Interval,
    /// Constant added to the carried channels of the fixed-width layout to
    /// keep them ReLU-transparent; absent for fixed-depth.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub carry_shift: Option<f64>,
}

/// A dense feed-forward network with ReLU on all hidden layers and identity
/// on the output layer. Input and output are one-dimensional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReluNetwork {
    pub architecture: Architecture,
    pub meta: NetworkMeta,
    /// Hidden layers followed by the final identity layer.
    pub layers: Vec<Layer>,
}

impl ReluNetwork {
    /// Standard forward pass: ReLU after every layer except the last.
    pub fn forward(&self, x: f64) -> f64 {
        let mut values = vec![x];
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            values = layer.affine(&values);
            if i != last {
                for v in &mut values {
                    *v = v.max(0.0);
                }
            }
        }
        debug_assert_eq!(values.len(), 1);
        values[0]
    }

    pub fn hidden_layer_count(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn hidden_neuron_count(&self) -> usize {
        self.layers[..self.layers.len() - 1]
            .iter()
            .map(|l| l.out_dim)
            .sum()
    }

    pub fn max_hidden_width(&self) -> usize {
        self.layers[..self.layers.len() - 1]
            .iter()
            .map(|l| l.out_dim)
            .max()
            .unwrap_or(0)
    }

    /// Structural checks for deserialized networks: dimensions chain, the
    /// input is scalar, the output is scalar, and the metadata counts match.
    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Schema("network has no layers".into()));
        }
        for layer in &self.layers {
            layer.validate()?;
        }
        if self.layers[0].in_dim != 1 {
            return Err(Error::Schema("network input dimension must be 1".into()));
        }
        if self.layers[self.layers.len() - 1].out_dim != 1 {
            return Err(Error::Schema("network output dimension must be 1".into()));
        }
        for pair in self.layers.windows(2) {
            if pair[0].out_dim != pair[1].in_dim {
                return Err(Error::Schema("layer dimensions do not chain".into()));
            }
        }
        if self.meta.hidden_neurons != self.hidden_neuron_count()
            || self.meta.depth != self.layers.len() + 1
        {
            return Err(Error::Schema("metadata does not match layer shapes".into()));
        }
        Ok(())
    }
}

/// Slopes of the sewn function, validated finite.
fn node_slopes(pwl: &PwlApproximation) -> Result<Vec<f64>> {
    (0..pwl.segment_count())
        .map(|i| {
            let k = pwl.node_slope(i);
            if k.is_finite() {
                Ok(k)
            } else {
                Err(Error::InvalidInput(format!(
                    "segment {i} has non-finite slope {k}"
                )))
            }
        })
        .collect()
}

/// Sign convention: flat segments count as positive so the construction
/// stays total (their unit is identically zero either way).
fn sgn(k: f64) -> f64 {
    if k < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Builds the two-hidden-layer network: `2n` shifted ReLUs, `n` segment
/// units, one summing output neuron. Hidden neuron count is exactly `3n`.
pub fn build_fixed_depth(pwl: &PwlApproximation) -> Result<ReluNetwork> {
    let n = pwl.segment_count();
    let xs = pwl.breakpoints();
    let ks = node_slopes(pwl)?;

    // Layer 1: relu(x - x_i) and relu(x - x_{i+1}) per segment.
    let mut w1 = Vec::with_capacity(2 * n);
    let mut b1 = Vec::with_capacity(2 * n);
    for i in 0..n {
        w1.push(vec![1.0]);
        b1.push(-xs[i]);
        w1.push(vec![1.0]);
        b1.push(-xs[i + 1]);
    }

    // Layer 2: relu(|k_i| * (first - second)) per segment.
    let mut w2 = vec![vec![0.0; 2 * n]; n];
    let b2 = vec![0.0; n];
    for i in 0..n {
        w2[i][2 * i] = ks[i].abs();
        w2[i][2 * i + 1] = -ks[i].abs();
    }

    // Output: sum of sgn(k_i) * unit_i plus the leftmost node value.
    let w3 = vec![ks.iter().map(|&k| sgn(k)).collect::<Vec<f64>>()];
    let b3 = vec![pwl.node_values()[0]];

    let layers = vec![
        Layer::dense(w1, b1),
        Layer::dense(w2, b2),
        Layer::dense(w3, b3),
    ];
    Ok(ReluNetwork {
        architecture: Architecture::FixedDepth,
        meta: NetworkMeta {
            n_segments: n,
            hidden_neurons: 3 * n,
            depth: 4,
            domain: pwl.domain(),
            carry_shift: None,
        },
        layers,
    })
}

/// Builds the narrow variant: one four-layer block per segment, every layer
/// of width at most 5 (this realization uses 4-3-2-2), threading the shifted
/// input and the shifted running sum through the blocks.
pub fn build_fixed_width(pwl: &PwlApproximation) -> Result<ReluNetwork> {
    let n = pwl.segment_count();
    let xs = pwl.breakpoints();
    let vs = pwl.node_values();
    let ks = node_slopes(pwl)?;

    // Large enough that x + shift and accumulator + shift stay nonnegative
    // for every x in the domain.
    let max_abs_node = vs.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let shift = xs[0].abs().max(xs[n].abs()).max(max_abs_node) + 1.0;

    let mut layers = Vec::with_capacity(4 * n + 1);
    for i in 0..n {
        let (k, si) = (ks[i].abs(), sgn(ks[i]));
        // Block input: [x] for the first block, [p, a] afterwards, where
        // p = x + shift and a = accumulator + shift.
        if i == 0 {
            // L1 from the raw input: p, q1 = relu(x - x_0), q2 = relu(x - x_1),
            // a = initial accumulator (constant v_0 + shift).
            layers.push(Layer::dense(
                vec![vec![1.0], vec![1.0], vec![1.0], vec![0.0]],
                vec![shift, -xs[0], -xs[1], vs[0] + shift],
            ));
        } else {
            // L1 from [p, a]: same channels, breakpoint offsets corrected for
            // the shift riding on p.
            layers.push(Layer::dense(
                vec![
                    vec![1.0, 0.0],
                    vec![1.0, 0.0],
                    vec![1.0, 0.0],
                    vec![0.0, 1.0],
                ],
                vec![0.0, -(xs[i] + shift), -(xs[i + 1] + shift), 0.0],
            ));
        }
        // L2 from [p, q1, q2, a]: the segment unit u = relu(|k|(q1 - q2)).
        layers.push(Layer::dense(
            vec![
                vec![1.0, 0.0, 0.0, 0.0],
                vec![0.0, k, -k, 0.0],
                vec![0.0, 0.0, 0.0, 1.0],
            ],
            vec![0.0, 0.0, 0.0],
        ));
        // L3 from [p, u, a]: fold the unit into the accumulator.
        layers.push(Layer::dense(
            vec![vec![1.0, 0.0, 0.0], vec![0.0, si, 1.0]],
            vec![0.0, 0.0],
        ));
        // L4: plain carry, completing the four-layer block.
        layers.push(Layer::dense(
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![0.0, 0.0],
        ));
    }
    // Output: read the accumulator and remove the shift.
    layers.push(Layer::dense(vec![vec![0.0, 1.0]], vec![-shift]));

    let hidden_neurons: usize = layers[..layers.len() - 1].iter().map(|l| l.out_dim).sum();
    debug_assert_eq!(hidden_neurons, 11 * n);
    Ok(ReluNetwork {
        architecture: Architecture::FixedWidth,
        meta: NetworkMeta {
            n_segments: n,
            hidden_neurons,
            depth: 4 * n + 2,
            domain: pwl.domain(),
            carry_shift: Some(shift),
        },
        layers,
    })
}

/// Maximum absolute difference between the network and the sewn function on
/// a uniform grid over the domain. Both constructions are exact up to
/// floating-point rounding, so this should come out at or below 1e-9.
pub fn verify_equivalence(net: &ReluNetwork, pwl: &PwlApproximation, grid: usize) -> f64 {
    assert!(
        grid >= 1000,
        "verification grid must have at least 1000 points"
    );
    pwl.domain()
        .grid(grid)
        .map(|x| (net.forward(x) - pwl.evaluate(x)).abs())
        .fold(0.0, f64::max)
}
