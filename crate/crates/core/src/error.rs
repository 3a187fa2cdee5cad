use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("root finding failed: {0}")]
    RootFinding(String),

    #[error("saturation bracket failure: {0}")]
    SaturationBracket(String),

    #[error("singular linear system at pivot {0}")]
    Singular(usize),

    #[error("line search failed after {iterations} Newton iterations (residual {residual:.3e})")]
    LineSearch { iterations: usize, residual: f64 },

    #[error("time step {step} did not converge: {reason}")]
    NonConvergence { step: usize, reason: String },

    #[error("invariant violated at step {step}: {what}")]
    Invariant { step: usize, what: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("hypothesis {name} violated: {detail}")]
    Hypothesis { name: String, detail: String },

    #[error("field dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("malformed field file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
