use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("face {face} has zero area")]
    DegenerateTriangle { face: usize },

    #[error("edge ({0}, {1}) borders more than two faces")]
    NonManifoldEdge(usize, usize),

    #[error("mesh has {0} connected components")]
    Disconnected(usize),

    #[error("eigensolver did not converge; worst residuals {residuals:?}")]
    EigenNonConvergence { residuals: Vec<f64> },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn at_stage(self, stage: &'static str) -> Error {
        match self {
            Error::Stage { .. } => self,
            other => Error::Stage {
                stage,
                source: Box::new(other),
            },
        }
    }

    /// Process exit code: 1 config, 2 data, 3 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Stage { source, .. } => source.exit_code(),
            Error::Config(_) | Error::InvalidArgument(_) => 1,
            Error::Parse { .. }
            | Error::InvalidMesh(_)
            | Error::DegenerateTriangle { .. }
            | Error::NonManifoldEdge(..)
            | Error::Disconnected(_)
            | Error::Data(_)
            | Error::DimensionMismatch { .. }
            | Error::Io(_)
            | Error::Json(_) => 2,
            Error::EigenNonConvergence { .. } | Error::Singular(_) | Error::NonFinite(_) => 3,
        }
    }
}
