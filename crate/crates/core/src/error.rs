use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("inadmissible state{}: {detail}", node.map(|n| format!(" at node {n}")).unwrap_or_default())]
    InadmissibleState { node: Option<usize>, detail: String },

    #[error("degenerate edge ({i},{j}): d_ij = 0 with incompatible flux projections")]
    DegenerateEdge { i: usize, j: usize },

    #[error("limiter error on edge ({i},{j}): {detail}")]
    Limiter { i: usize, j: usize, detail: String },

    #[error("stage admissibility violation at t={time}, node {node}: {detail}")]
    StageViolation { time: f64, node: usize, detail: String },

    #[error("step size underflow at t={time}: {retries} halvings did not satisfy the stage CFL bound")]
    StepRetriesExhausted { time: f64, retries: usize },

    #[error("maximum step count {0} exceeded")]
    MaxStepsExceeded(usize),

    #[error("unsupported case: {0}")]
    Unsupported(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn inadmissible(node: Option<usize>, detail: impl Into<String>) -> Self {
        Error::InadmissibleState {
            node,
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
