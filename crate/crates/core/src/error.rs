use thiserror::Error;

/// Every failure the library reports.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("below the resolution floor: {0}")]
    Resolution(String),
    #[error("internal error: {0}")]
    Internal(String),
    #[error("comparability bound violated for vertices {v} and {w}: diameter {diam} > bound {bound}")]
    ComparabilityViolation { v: usize, w: usize, diam: f64, bound: f64 },
    #[error("no anchor vertices for the target at level {level}")]
    EmptyAnchor { level: usize },
    #[error("target set unreachable from source set")]
    Unreachable,
    #[error("insufficient depth: {0}")]
    Depth(String),
    #[error("outside the supported domain: {0}")]
    Domain(String),
    #[error("relation multiplicity {found} exceeds {allowed}")]
    InvalidRelation { found: usize, allowed: usize },
    #[error("precondition violated: {0}")]
    PreconditionViolation(String),
    #[error("sample {sample} lies in no cover ball after the containment margin")]
    Margin { sample: usize },
    #[error("config error: {0}")]
    Config(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
