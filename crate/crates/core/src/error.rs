use arrayopt_autodiff::AutodiffError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid layout: {0}")]
    InvalidLayout(String),
    #[error("layout has no elements")]
    EmptyLayout,
    #[error("{count} elements exceed the limit of {max}")]
    TooManyElements { count: usize, max: usize },
    #[error("operation needs at least {needed} elements, layout has {found}")]
    TooFewElements { needed: usize, found: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("degenerate pattern: {0}")]
    DegeneratePattern(String),
    #[error("no -3 dB crossing on the {0} side of the peak within the grid")]
    NoCrossing(&'static str),
    #[error("minimum distance {min_distance} violates the threshold {theta}")]
    ConstraintViolated { min_distance: f64, theta: f64 },
    #[error("training diverged at epoch {epoch}: non-finite loss")]
    Diverged { epoch: usize },
    #[error("malformed data: {0}")]
    Format(String),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
