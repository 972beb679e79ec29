//! Reverse-mode differentiation over dense `f64` tensors, with the handful of
//! layers and the Adam optimizer needed by the array-layout surrogates.

pub mod adam;
pub mod error;
pub mod gradcheck;
pub mod graph;
pub mod nn;
pub mod params;
pub mod tensor;
pub mod weights;

pub use adam::{AdamConfig, AdamState};
pub use error::{AutodiffError, Result};
pub use graph::{Graph, Var};
pub use params::{Param, ParamStore};
pub use tensor::Tensor;
