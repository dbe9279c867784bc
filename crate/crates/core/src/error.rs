use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed game document: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    Dimension {
        what: String,
        expected: usize,
        found: usize,
    },

    #[error("partition must contain at least one group")]
    EmptyPartition,

    #[error("group `{name}` has non-positive mass {mass}")]
    NonPositiveMass { name: String, mass: f64 },

    #[error("duplicate group name `{0}`")]
    DuplicateGroupName(String),

    #[error("adjacency matrix is not symmetric at ({0}, {1})")]
    NonSymmetricAdjacency(usize, usize),

    #[error("adjacency entry ({0}, {1}) is {2}, expected 0 or 1")]
    NonBinaryAdjacency(usize, usize, f64),

    #[error("shift epsilon must be positive, got {0}")]
    NonPositiveEpsilon(f64),

    #[error("consumption share {value} of group {group} lies outside [0, 1]")]
    ShareOutOfRange { group: usize, value: f64 },

    #[error("finite-difference step leaves [0,1]^g along coordinate {0}")]
    Boundary(usize),

    #[error("split set is empty")]
    EmptySplit,

    #[error("profile is not a split: no group has an interior share")]
    NotASplit,

    #[error("restricted Jacobian is singular on S = {0:?}")]
    SingularSplit(Vec<usize>),

    #[error("split is not realizable: K_S = {0}")]
    NotRealizable(f64),

    #[error("operation requires a game with affine network effects")]
    NotAffine,

    #[error("{groups} groups exceeds the exhaustive limit of {limit}")]
    TooManyGroups { groups: usize, limit: usize },

    #[error("Newton iteration did not converge (residual {residual:e} after {iterations} iterations)")]
    NonConvergence { residual: f64, iterations: usize },

    #[error("need at least {needed} converged path points around p*, found {found}")]
    InsufficientPoints { needed: usize, found: usize },

    #[error("outcome is not a second-stage Nash equilibrium (worst slack {0:e})")]
    NotAnEquilibrium(f64),

    #[error("unknown graph structure `{0}`")]
    UnknownStructure(String),

    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
