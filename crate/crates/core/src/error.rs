use thiserror::Error;

pub type Result<T, E = LabError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("grid needs at least 2 cells, got {0}")]
    GridSize(usize),

    #[error("grid with {nx} cells is not aligned to {n} periods (needs a multiple of {})", 2 * n)]
    Alignment { nx: usize, n: u32 },

    #[error("step matrix is singular at dof {dof}")]
    Singular { dof: String },

    #[error("solution diverged at step {step} (non-finite state)")]
    Divergence { step: usize },

    #[error("explicit scheme unstable: dt = {dt} exceeds limit {limit}; use a smaller dt or more substeps")]
    Stability { dt: f64, limit: f64 },

    #[error("fields are not comparable: {0}")]
    Comparability(String),

    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl LabError {
    /// Process exit status for the CLI: 2 = configuration, 3 = numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config { .. } | LabError::Alignment { .. } | LabError::Io(_) | LabError::Json(_) | LabError::Csv(_) => 2,
            LabError::Domain(_) | LabError::GridSize(_) => 2,
            LabError::Singular { .. }
            | LabError::Divergence { .. }
            | LabError::Stability { .. }
            | LabError::Comparability(_) => 3,
        }
    }
}
