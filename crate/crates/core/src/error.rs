use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("alpha >= beta (alpha={alpha}, beta={beta})")]
    InvalidThresholds { alpha: f64, beta: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("shape mismatch: expected {expected} points, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("CFL violated: dt={dt}, need <= {limit}")]
    Cfl { dt: f64, limit: f64 },

    #[error("non-finite value in u at step {step}")]
    NonFinite { step: usize },

    #[error("invalid relay value {0}: must be -1 or +1")]
    InvalidRelayValue(f64),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("config parse error at line {line}, column {column}: {message}")]
    ConfigParse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("time index {0} has no backward difference")]
    NoBackwardDifference(usize),

    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),

    #[error("solution needs at least two snapshots")]
    DegenerateSolution,

    #[error("time slab [{start}, {end}] exceeds stored snapshots")]
    SlabOutOfRange { start: f64, end: f64 },

    #[error("radius {radius} exceeds rho0 = {rho0}")]
    RadiusExceedsRho0 { radius: f64, rho0: f64 },

    #[error("cylinder of radius {0} exceeds the domain")]
    CylinderOutsideDomain(f64),

    #[error("vanishing normal denominator at t_index={t_index}, index={index}")]
    VanishingNormal { t_index: usize, index: usize },

    #[error("inconsistent event: {0}")]
    InconsistentEvent(String),

    #[error("digest mismatch for {path}")]
    DigestMismatch { path: PathBuf },

    #[error("corrupt data in {path}: {message}")]
    CorruptData { path: PathBuf, message: String },

    #[error("diagnostic assertion failed: {0}")]
    Assertion(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 2 config, 3 data integrity, 4 diagnostic
    /// assertion, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidThresholds { .. }
            | Error::InvalidGrid(_)
            | Error::Cfl { .. }
            | Error::InvalidRelayValue(_)
            | Error::Config(_)
            | Error::ConfigParse { .. } => 2,
            Error::DigestMismatch { .. } | Error::CorruptData { .. } => 3,
            Error::Assertion(_) => 4,
            _ => 1,
        }
    }
}
