use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("point must have at least one coordinate")]
    EmptyPoint,

    #[error("division by a jet whose value is zero")]
    SingularDivision,

    /// Principal `Log` is undefined on the closed negative real axis.
    #[error("value {value} lies on the branch cut of the principal logarithm")]
    BranchCut { value: Complex64 },

    #[error("point {point:?} is the singular point of the solution family")]
    SingularPoint { point: Vec<f64> },

    #[error("critical exponent p = {p}: the power-family constants are undefined")]
    CriticalExponent { p: f64 },

    #[error("vanishing {quantity}: squared norm {norm2:e} below 1e-250")]
    VanishingNorm { quantity: &'static str, norm2: f64 },

    #[error("horizontal index {index} out of range for {count} fields")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("evaluator failed at stencil point {point:?}: {source}")]
    Stencil { point: Vec<f64>, source: Box<Error> },

    #[error("evaluation failed at point {point:?} (p = {p:?}, L = {l}): {source}")]
    Evaluation {
        point: Vec<f64>,
        p: Option<f64>,
        l: f64,
        source: Box<Error>,
    },

    #[error("only {found} of {requested} grid points survived the exclusions after 100x oversampling")]
    GridExhausted { requested: usize, found: usize },

    #[error("output: {0}")]
    Output(String),
}

impl Error {
    pub(crate) fn at(self, point: &[f64], p: Option<f64>, l: f64) -> Error {
        Error::Evaluation {
            point: point.to_vec(),
            p,
            l,
            source: Box::new(self),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Output(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Output(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Output(e.to_string())
    }
}
