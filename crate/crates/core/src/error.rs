use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse failure class, used by the command-line driver to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Mesh,
    Assembly,
    Solver,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh syntax error at line {line}: {message}")]
    MeshSyntax { line: usize, message: String },

    #[error("mesh topology error: {entity} {index}: {message}")]
    MeshTopology {
        entity: &'static str,
        index: usize,
        message: String,
    },

    #[error("unknown boundary tag {0}")]
    UnknownTag(i64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("assembly error on element {element}: {message}")]
    Element { element: usize, message: String },

    #[error(
        "structural assembly error: skew-symmetry violated at ({row}, {col}): |J + J^T| = {magnitude:e} exceeds {tolerance:e}"
    )]
    SkewSymmetry {
        row: usize,
        col: usize,
        magnitude: f64,
        tolerance: f64,
    },

    #[error("structural assembly error: {0}")]
    Structure(String),

    #[error("factorization of {matrix} failed: {message}")]
    Factorization { matrix: String, message: String },

    #[error("Dirac structure violated: residual {residual:e} exceeds {tolerance:e} (sample pair {sample_a}, {sample_b})")]
    DiracViolation {
        residual: f64,
        tolerance: f64,
        sample_a: usize,
        sample_b: usize,
    },

    #[error("boundary condition error: {0}")]
    BoundaryCondition(String),

    #[error("dependent constraints: {0:?}")]
    DependentConstraints(Vec<String>),

    #[error("solver error: {0}")]
    Solver(String),

    #[error("non-finite state at step {step}")]
    NonFinite { step: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::MeshSyntax { .. } | Error::MeshTopology { .. } => ErrorCategory::Mesh,
            Error::UnknownTag(_) | Error::InvalidParameter(_) | Error::BoundaryCondition(_) => ErrorCategory::Config,
            Error::Element { .. }
            | Error::SkewSymmetry { .. }
            | Error::Structure(_)
            | Error::DiracViolation { .. }
            | Error::Dimension(_) => ErrorCategory::Assembly,
            Error::Factorization { .. } | Error::DependentConstraints(_) | Error::Solver(_) | Error::NonFinite { .. } => {
                ErrorCategory::Solver
            }
        }
    }
}
