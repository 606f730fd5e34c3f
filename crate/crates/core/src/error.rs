use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("reference path needs at least 2 distinct waypoints, got {0}")]
    DegeneratePath(usize),

    #[error("pose is {distance:.3} m from the path, corridor is {corridor:.3} m")]
    PoseOffCorridor { distance: f64, corridor: f64 },

    #[error("arclength {l:.3} m outside path range [0, {length:.3}]")]
    OutOfPathRange { l: f64, length: f64 },

    #[error("covariance determinant {det:e} below singularity guard")]
    SingularCovariance { det: f64 },

    #[error("risk set is empty")]
    EmptyRiskSet,

    #[error("cost config is in {configured} mode, {requested} cost requested")]
    ModeMismatch {
        configured: &'static str,
        requested: &'static str,
    },

    #[error("planning horizon {horizon} s shorter than step {step} s")]
    DegenerateHorizon { horizon: f64, step: f64 },

    #[error("replay buffer holds {available} transitions, {requested} requested")]
    BufferUnderfilled { available: usize, requested: usize },

    #[error("malformed replay snapshot: {0}")]
    Snapshot(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid field `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("no input to aggregate")]
    EmptyInput,

    #[error("step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn at_step(self, step: usize) -> Self {
        Error::Step {
            step,
            source: Box::new(self),
        }
    }

    /// True for errors caused by bad user input rather than a failed run.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Parse { .. } | Error::Validation { .. } | Error::DegeneratePath(_) => true,
            Error::Step { .. } => false,
            _ => false,
        }
    }
}
