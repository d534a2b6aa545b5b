//! Error type shared by every module in the crate.
//!
//! Each variant carries a stable machine-readable kind string (see
//! [`Error::kind`]) so the CLI can emit structured error JSON, and maps to a
//! process exit class via [`Error::exit_code`]: `2` for configuration/input
//! problems, `3` for runtime failures.

use std::fmt;
use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug)]
pub enum Error {
    /// A vector or matrix dimension did not match what the operation expects.
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    /// Invalid network or kernel specification (non-positive dims, bad scale).
    InvalidSpec(String),
    /// Finite-difference step must be strictly positive.
    InvalidStep,
    /// All training points coincide; no bandwidth can be derived.
    DegenerateData,
    /// No kernel eigenvalue exceeds the ridge cutoff.
    NoComponents,
    /// Membership threshold must be strictly positive.
    InvalidThreshold,
    EmptyDataset,
    EmptyLosses,
    /// Support scores fed to the reward map must be nonnegative.
    NegativeLoss,
    /// Autoencoder hidden widths must not fall below the input width.
    BottleneckSpec,
    /// The autoencoder requires a strictly positive l2 penalty.
    RegularizationRequired,
    /// Exact-set scorer inputs must be integral.
    NonDiscreteInput(String),
    InvalidAction(String),
    /// Dataset generation needs at least one pair or trajectory.
    InvalidCount,
    /// Discount factor must lie in [0, 1).
    InvalidDiscount(f64),
    /// A reward model emitted a per-step value outside [0, 1].
    RewardOutOfRange(f64),
    DatasetNotFound(PathBuf),
    ModelNotFound(PathBuf),
    EmptyGrid,
    EmptySweep,
    NoRuns(PathBuf),
    /// Config file failed to parse or validate.
    InvalidConfig(String),
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
}

impl Error {
    /// Stable identifier used in CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::ShapeMismatch { .. } => "ShapeMismatch",
            Error::InvalidSpec(_) => "InvalidSpec",
            Error::InvalidStep => "InvalidStep",
            Error::DegenerateData => "DegenerateData",
            Error::NoComponents => "NoComponents",
            Error::InvalidThreshold => "InvalidThreshold",
            Error::EmptyDataset => "EmptyDataset",
            Error::EmptyLosses => "EmptyLosses",
            Error::NegativeLoss => "NegativeLoss",
            Error::BottleneckSpec => "BottleneckSpec",
            Error::RegularizationRequired => "RegularizationRequired",
            Error::NonDiscreteInput(_) => "NonDiscreteInput",
            Error::InvalidAction(_) => "InvalidAction",
            Error::InvalidCount => "InvalidCount",
            Error::InvalidDiscount(_) => "InvalidDiscount",
            Error::RewardOutOfRange(_) => "RewardOutOfRange",
            Error::DatasetNotFound(_) => "DatasetNotFound",
            Error::ModelNotFound(_) => "ModelNotFound",
            Error::EmptyGrid => "EmptyGrid",
            Error::EmptySweep => "EmptySweep",
            Error::NoRuns(_) => "NoRuns",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::Io { .. } => "Io",
            Error::Json { .. } => "Json",
        }
    }

    /// Process exit code class: 2 = config/input error, 3 = runtime failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidSpec(_)
            | Error::InvalidThreshold
            | Error::InvalidCount
            | Error::InvalidDiscount(_)
            | Error::BottleneckSpec
            | Error::RegularizationRequired
            | Error::DatasetNotFound(_)
            | Error::ModelNotFound(_)
            | Error::EmptyGrid
            | Error::EmptySweep
            | Error::NoRuns(_)
            | Error::InvalidConfig(_) => 2,
            _ => 3,
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ShapeMismatch {
                what,
                expected,
                got,
            } => write!(f, "shape mismatch for {what}: expected {expected}, got {got}"),
            Error::InvalidSpec(msg) => write!(f, "invalid spec: {msg}"),
            Error::InvalidStep => write!(f, "finite-difference step must be > 0"),
            Error::DegenerateData => write!(f, "all points coincide; median pairwise distance is 0"),
            Error::NoComponents => write!(f, "no eigenvalue exceeds the ridge cutoff"),
            Error::InvalidThreshold => write!(f, "membership threshold must be > 0"),
            Error::EmptyDataset => write!(f, "expert dataset is empty"),
            Error::EmptyLosses => write!(f, "loss list is empty"),
            Error::NegativeLoss => write!(f, "support score must be >= 0"),
            Error::BottleneckSpec => {
                write!(f, "autoencoder hidden widths must be >= input dim (no bottleneck)")
            }
            Error::RegularizationRequired => {
                write!(f, "autoencoder weight decay must be > 0")
            }
            Error::NonDiscreteInput(msg) => write!(f, "non-discrete input: {msg}"),
            Error::InvalidAction(msg) => write!(f, "invalid action: {msg}"),
            Error::InvalidCount => write!(f, "count must be >= 1"),
            Error::InvalidDiscount(g) => write!(f, "discount factor must be in [0, 1), got {g}"),
            Error::RewardOutOfRange(r) => {
                write!(f, "per-step reward {r} outside [0, 1]")
            }
            Error::DatasetNotFound(p) => write!(f, "dataset not found: {}", p.display()),
            Error::ModelNotFound(p) => write!(f, "model not found: {}", p.display()),
            Error::EmptyGrid => write!(f, "score grid has no points"),
            Error::EmptySweep => write!(f, "experiment sweep is empty"),
            Error::NoRuns(p) => write!(f, "no run records found in {}", p.display()),
            Error::InvalidConfig(msg) => write!(f, "invalid config: {msg}"),
            Error::Io { path, source } => write!(f, "io error on {}: {source}", path.display()),
            Error::Json { path, source } => {
                write!(f, "json error on {}: {source}", path.display())
            }
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io { source, .. } => Some(source),
            Error::Json { source, .. } => Some(source),
            _ => None,
        }
    }
}
