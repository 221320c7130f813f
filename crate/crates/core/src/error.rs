use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed document: {0}")]
    Malformed(String),
    #[error("invalid dimensions: {0}")]
    Dimensions(String),
    #[error("zero row at index {0}")]
    ZeroRow(usize),
    #[error("non-finite entry at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("rejection sampling failed for row {row} after {retries} retries (rho too close to 1?)")]
    RetryExhausted { row: usize, retries: usize },
    #[error("row {0} has dual norm below 1e-300")]
    RowUnderflow(usize),
    #[error("matrix is not positive definite (smallest eigenvalue {0:e})")]
    NotPositiveDefinite(f64),
    #[error("non-finite input: {0}")]
    NonFiniteInput(&'static str),
    #[error("precondition violated in {op}: measured {measured:e} > bound {bound:e}")]
    Precondition { op: &'static str, measured: f64, bound: f64 },
    #[error("descent bound violated at iteration {iter}: lhs {lhs:e} > rhs {rhs:e} ({which})")]
    BoundViolation { which: &'static str, iter: usize, lhs: f64, rhs: f64 },
    #[error("monitored quantity failed to decrease for {streak} consecutive iterations (last at iteration {iter})")]
    MonitorStalled { iter: usize, streak: usize },
    #[error("no eigen-component case holds; table (k, <z,z_k>, <z,Nz_k>, |Nz_k|): {table:?}")]
    EigenCase { table: Vec<(usize, f64, f64, f64)> },
    #[error("derandomized direction failed: F(g) = {value:e} <= 0 for g = {g:?}")]
    Derandomization { value: f64, g: Vec<f64> },
    #[error("direction identity mismatch ({which}): {lhs:e} vs {rhs:e}")]
    Identity { which: &'static str, lhs: f64, rhs: f64 },
    #[error("no accepted samples out of {0}")]
    NoAcceptedSamples(usize),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("phase {phase}: {source}")]
    Phase {
        phase: usize,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn in_phase(self, phase: usize) -> Self {
        match self {
            e @ Error::Phase { .. } => e,
            e => Error::Phase { phase, source: Box::new(e) },
        }
    }
}
