use thiserror::Error;

/// Errors raised by the numerical kernels and the experiment harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// Only the identity solution of the collision equations exists
    /// (equal group velocities).
    #[error("degenerate collision: only the identity solution exists")]
    DegenerateCollision,

    #[error("no collision: group velocities are equal")]
    NoCollision,

    #[error("size budget exceeded: {what} = {size} (limit {limit})")]
    Budget {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("momentum {k} is not on the grid of a {l}-site segment")]
    OffGrid { k: f64, l: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("local occupation {occupation} exceeds the cutoff of a {dim}-dimensional site")]
    Cutoff { occupation: usize, dim: usize },

    #[error("incompatible local spaces")]
    SpaceMismatch,

    #[error("gate does not conserve the particle number")]
    SectorViolation,

    #[error("theta index {index} out of range 1..={max}")]
    ThetaIndex { index: usize, max: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("at t = {time}: {source}")]
    AtTime {
        time: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("{}", format_validation(.0))]
    Validation(Vec<ValidationIssue>),

    #[error("io: {0}")]
    Io(String),
}

/// One problem found while validating a run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationIssue {
    pub line: usize,
    pub message: String,
}

fn format_validation(issues: &[ValidationIssue]) -> String {
    let mut out = String::from("invalid configuration:");
    for issue in issues {
        out.push_str(&format!("\n  line {}: {}", issue.line, issue.message));
    }
    out
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
