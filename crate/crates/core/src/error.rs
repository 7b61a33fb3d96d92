use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = MfpcError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum MfpcError {
    #[error("empty matrix: a dataset needs at least one feature and one sample")]
    EmptyMatrix,

    #[error("non-finite entry at feature {feature}, sample {sample}")]
    NonFiniteEntry { feature: usize, sample: usize },

    #[error("label {label} of sample {sample} is outside 1..={k}")]
    LabelOutOfRange { sample: usize, label: i64, k: usize },

    #[error("class {class} never occurs in the label vector")]
    MissingClass { class: usize },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("member set is empty")]
    EmptyMemberSet,

    #[error("eigen iteration did not converge within {iterations} iterations")]
    ConvergenceFailure { iterations: usize },

    #[error("deflation direction has zero norm")]
    ZeroDirection,

    #[error("inner convex solver stalled after {sweeps} sweeps (duality gap {gap:e})")]
    InnerSolverStall { sweeps: usize, gap: f64 },

    #[error("projection column {column} collapsed to zero norm")]
    ZeroColumn { column: usize },

    #[error("cluster {cluster} emptied on two consecutive reassignments")]
    EmptyClusterUnrecoverable { cluster: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("file not found: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("unknown dataset `{name}` (valid: {})", .valid.join(", "))]
    UnknownDataset { name: String, valid: Vec<String> },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
