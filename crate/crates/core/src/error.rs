use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid dimension {0}: {1}")]
    InvalidDimension(usize, &'static str),

    #[error("non-finite entry at flat offset {0}")]
    NonFinite(usize),

    #[error("{kind} symmetry violated: residual {residual:e} exceeds tolerance {tol:e}")]
    SymmetryViolation {
        kind: &'static str,
        residual: f64,
        tol: f64,
    },

    #[error("degenerate plane: Gram determinant {0:e}")]
    DegeneratePlane(f64),

    #[error("rows are rank deficient (residual norm {0:e})")]
    RankDeficient(f64),

    #[error("frame is not orthonormal: Gram residual {0:e}")]
    NotOrthonormal(f64),

    #[error("weights ({lambda}, {mu}) outside [-1, 1]")]
    InvalidWeights { lambda: f64, mu: f64 },

    #[error("matrix is not a holonomy element: orthogonality residual {orth:e}, J-commutator residual {comm:e}")]
    NotUnitary { orth: f64, comm: f64 },

    #[error("invalid options: {0}")]
    InvalidOptions(String),

    #[error("frame is not a zero frame: |u| = {0:e}")]
    NotZeroFrame(f64),

    #[error("incompatible holonomy group: {0}")]
    IncompatibleGroup(String),

    #[error("blow-up at t = {t}: max |component| = {max_abs:e}")]
    BlowUp { t: f64, max_abs: f64 },

    #[error("step size underflow at t = {t}: dt = {dt:e}")]
    StepUnderflow { t: f64, dt: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
