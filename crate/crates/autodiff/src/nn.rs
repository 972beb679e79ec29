//! Layer helpers shared by the surrogate architectures.

use rand::Rng;

use crate::error::Result;
use crate::graph::{Graph, Var};
use crate::tensor::Tensor;

/// Uniform fan-in initialization. `gain = 2` gives the He variant used ahead
/// of ReLU; `gain = 1` the plain LeCun bound.
pub fn uniform_fan_in<R: Rng + ?Sized>(rng: &mut R, fan_in: usize, fan_out: usize, gain: f64) -> Tensor {
    let bound = (3.0 * gain / fan_in.max(1) as f64).sqrt();
    let data = (0..fan_in * fan_out)
        .map(|_| rng.random_range(-bound..bound))
        .collect();
    Tensor::matrix(fan_in, fan_out, data)
}

/// `x w + b`.
pub fn dense(g: &mut Graph, x: Var, w: Var, b: Var) -> Result<Var> {
    let h = g.matmul(x, w)?;
    g.add_bias(h, b)
}

/// Mean squared error between two same-shaped nodes.
pub fn mse(g: &mut Graph, pred: Var, target: Var) -> Result<Var> {
    let d = g.sub(pred, target)?;
    let sq = g.mul(d, d)?;
    Ok(g.mean(sq))
}
