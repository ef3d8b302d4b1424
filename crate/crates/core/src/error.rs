use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} qubits, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{what} refused for n = {n}: limit is {limit} qubits")]
    SizeGuard {
        what: &'static str,
        n: usize,
        limit: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("degenerate builder input: {0}")]
    DegenerateBuilder(String),

    #[error("sign flip at target {index} has no effect (entry is zero); use the shift variant")]
    FlipHasNoEffect { index: usize },

    #[error("operation needs a {expected} operator, got {found}")]
    UnsupportedForm {
        expected: &'static str,
        found: &'static str,
    },

    #[error("eigensolver did not converge after {iterations} iterations (best residual {best_residual:e}){}", at_s(*.s))]
    NoConvergence {
        iterations: usize,
        best_residual: f64,
        s: Option<f64>,
    },

    #[error("invariant subspace has dimension {dim}, above the allowed {limit}")]
    RankTolerance { dim: usize, limit: usize },

    #[error("step size underflow at t = {t}")]
    Stiffness { t: f64 },

    #[error("norm drift {drift:e} exceeds bound {bound:e}")]
    IntegratorFailure { drift: f64, bound: f64 },

    #[error("could not bracket T* for n = {n}: fidelity stayed below {target} up to T = {t_max}")]
    BracketFailure {
        n: usize,
        target: f64,
        t_max: f64,
        curve: Vec<(f64, f64)>,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error(transparent)]
    Dimacs(#[from] crate::sat::DimacsError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed table: {0}")]
    Table(String),
}

fn at_s(s: Option<f64>) -> String {
    s.map(|s| format!(" at s = {s}")).unwrap_or_default()
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::ContractViolation(msg.into())
    }

    /// Attaches the interpolation parameter to a solver failure.
    pub fn at(self, s: f64) -> Self {
        match self {
            Error::NoConvergence {
                iterations,
                best_residual,
                ..
            } => Error::NoConvergence {
                iterations,
                best_residual,
                s: Some(s),
            },
            other => other,
        }
    }
}
