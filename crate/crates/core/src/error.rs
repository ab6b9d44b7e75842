use thiserror::Error;

use crate::exprlang::{EvalError, SyntaxError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("degenerate metric at {point}")]
    DegenerateMetric { point: String },
    #[error("signature mismatch: declared ({p},{q}), found ({found_p},{found_q})")]
    SignatureMismatch { p: usize, q: usize, found_p: usize, found_q: usize },
    #[error("invalid chart: {0}")]
    InvalidChart(String),
    #[error("variance mismatch: {0}")]
    VarianceMismatch(String),
    #[error("seed vector {index} is isotropic")]
    NullSeed { index: usize },
    #[error("seed flag is degenerate")]
    DegenerateFlag,
    #[error("finite-difference stencil does not fit: {0}")]
    DomainTooSmall(String),
    #[error("invalid finite-difference step {0}")]
    InvalidStep(f64),
    #[error("operation requires dimension >= {required}, got {found}")]
    DimensionTooLow { required: usize, found: usize },
    #[error("operation requires dimension {required}, got {found}")]
    WrongDimension { required: usize, found: usize },
    #[error("Hodge star squares to -1 on 2-forms in Lorentzian signature")]
    LorentzianUnsupported,
    #[error("frame is not orthonormal (defect {0:e})")]
    FrameNotOrthonormal(f64),
    #[error("spanning vectors are linearly dependent")]
    NotAPlane,
    #[error("plane is not totally isotropic (Gram defect {0:e})")]
    NotIsotropic(f64),
    #[error("embedding differential is rank deficient at {0}")]
    RankDeficient(String),
    #[error("induced metric is degenerate at {0}")]
    DegenerateInducedMetric(String),
    #[error("normal direction is isotropic at {0}")]
    NullNormal(String),
    #[error("hypersurface is not umbilic (residual {0:e})")]
    NotUmbilic(f64),
    #[error("gauge construction failed: {0}")]
    Gauge(String),
    #[error("ambient is not self-dual near the hypersurface (|W-|/|R| = {0:e})")]
    AmbientNotSelfDual(f64),
    #[error("metric has no nonzero null vectors")]
    NoNullVectors,
    #[error("trajectory left the chart domain at s = {s}")]
    LeftDomain { s: f64 },
    #[error("integrator step failure at s = {s}: {reason}")]
    StepFailure { s: f64, reason: String },
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
