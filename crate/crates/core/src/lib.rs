pub mod array_factor;
pub mod dataset;
pub mod error;
pub mod geometry;
pub mod geometry_optimizer;
pub mod layout_file;
pub mod surrogate;

pub use error::{Error, Result};
