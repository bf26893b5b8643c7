use thiserror::Error;

use crate::expr::{ParseError, Span};
use crate::jet::JetError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite coordinates {0:?}")]
    NonFinite(Vec<f64>),
    #[error("singular evaluation ({op} of {value}) at point {point:?}{}", fmt_span(.span))]
    Singular { op: &'static str, value: f64, point: Vec<f64>, span: Option<Span> },
    #[error("degenerate metric at {point:?}: {detail}")]
    DegenerateMetric { point: Vec<f64>, detail: String },
    #[error("differential is rank-deficient at {point:?}")]
    RankDeficient { point: Vec<f64> },
    #[error("internal pipeline error: {0}")]
    Pipeline(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("constant `{0}` is not bound")]
    UnboundConstant(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("only {found} of {wanted} valid sample points after {attempts} attempts")]
    SamplingExhausted { found: usize, wanted: usize, attempts: usize },
    #[error("base metric is not Einstein with c = {c}: residual {residual:e} at {point:?}")]
    NotEinstein { c: f64, residual: f64, point: Vec<f64> },
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

fn fmt_span(span: &Option<Span>) -> String {
    match span {
        Some(s) => format!(" in expression at {}..{}", s.start, s.end),
        None => String::new(),
    }
}

impl Error {
    /// Convert a jet failure raised while evaluating at `point`.
    pub fn from_jet(err: JetError, point: &[f64]) -> Self {
        match err {
            JetError::Singular { op, value } => {
                Error::Singular { op, value, point: point.to_vec(), span: None }
            }
            JetError::SingularMatrix { pivot } => Error::DegenerateMetric {
                point: point.to_vec(),
                detail: format!("order-0 matrix singular (pivot {pivot:e})"),
            },
            JetError::NonFinite(_) => Error::NonFinite(point.to_vec()),
            other => Error::Pipeline(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

/// Attach a point to jet errors.
pub(crate) trait AtPoint<T> {
    fn at(self, point: &[f64]) -> Result<T>;
}

impl<T> AtPoint<T> for std::result::Result<T, JetError> {
    fn at(self, point: &[f64]) -> Result<T> {
        self.map_err(|e| Error::from_jet(e, point))
    }
}
