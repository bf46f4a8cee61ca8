use thiserror::Error;

/// Position inside a metric configuration document (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Position {
    pub line: usize,
    pub column: usize,
}

impl std::fmt::Display for Position {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}, column {}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point {coords:?} is outside the domain of `{metric}`")]
    OutOfDomain { metric: String, coords: [f64; 4] },

    #[error("point chart does not match the chart of `{metric}`")]
    ChartMismatch { metric: String },

    #[error("singular metric: |det g| = {det:e}")]
    SingularMetric { det: f64 },

    #[error("metric signature is not (+,-,-,-): eigenvalues {eigenvalues:?}")]
    Signature { eigenvalues: [f64; 4] },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: String,
        value: f64,
        reason: &'static str,
    },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("parse error at {position}: expected {}", expected.join(", "))]
    Parse {
        position: Position,
        expected: Vec<String>,
    },

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error("invalid transform: a + b + 4ab = {residual:e} (a = {a}, b = {b})")]
    InvalidTransform { a: f64, b: f64, residual: f64 },

    #[error("stencil too coarse: Richardson disagreement {disagreement:e} exceeds {limit:e}")]
    StencilTooCoarse { disagreement: f64, limit: f64 },

    #[error("fit degenerate: predicted vector vanishes at the fit point")]
    FitDegenerate,

    #[error("field rank mismatch: expected {expected}, found {found}")]
    RankMismatch { expected: usize, found: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
