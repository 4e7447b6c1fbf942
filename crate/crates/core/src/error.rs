use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("syntax error in {context} at position {pos}: {msg}")]
    Syntax {
        context: String,
        pos: usize,
        msg: String,
    },
    #[error("config error: {0}")]
    Config(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-symmetric explicit components g{i}{j} and g{j}{i}")]
    NonSymmetric { i: usize, j: usize },
    #[error("singular metric at {0:?}")]
    SingularMetric(Vec<f64>),
    #[error("signature mismatch at {point:?}: declared {declared:?}, found {found:?}")]
    Signature {
        point: Vec<f64>,
        declared: Vec<i8>,
        found: Vec<i8>,
    },
    #[error("non-finite value while evaluating {0}")]
    NonFinite(String),
    #[error("step size underflow at t = {t} (geodesic leaves the chart?)")]
    StepUnderflow { t: f64 },
    #[error("trust radius exceeded: |v| = {norm} > {radius}")]
    TrustRadius { norm: f64, radius: f64 },
    #[error("newton shooting did not converge after {iters} iterations (residual {residual:e})")]
    NewtonFailed { iters: usize, residual: f64 },
    #[error("ill-conditioned stencil: {0}")]
    Stencil(String),
    #[error("extrapolation did not converge: {0}")]
    Extrapolation(String),
    #[error("quadrature failure: {0}")]
    Quadrature(String),
    #[error("not an Euler field: {0}")]
    NonEuler(String),
    #[error("pole at {0}")]
    Pole(String),
    #[error("fit failure: {0}")]
    Fit(String),
    #[error("insufficient coefficients: need u_{need}, have {have}")]
    MissingCoefficients { need: usize, have: usize },
    #[error("cap exceeded: {0}")]
    Cap(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
