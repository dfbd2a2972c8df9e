use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the lab.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("matrix is numerically rank-deficient: sigma_max = {sigma_max:e}, sigma_min = {sigma_min:e}")]
    RankDeficient { sigma_max: f64, sigma_min: f64 },

    #[error("matrix is not symmetric (relative asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is not positive definite (Cholesky pivot {pivot} is {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("row {index} is identically zero")]
    ZeroRow { index: usize },

    #[error("column {index} is identically zero")]
    ZeroColumn { index: usize },

    #[error("diagonal entry {index} is zero")]
    ZeroDiagonal { index: usize },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("non-finite activation in layer {layer}")]
    NonFiniteActivation { layer: usize },

    #[error("non-finite Hessian entry at coordinate {index}")]
    NonFiniteHessian { index: usize },

    #[error("gradient self-check failed: relative error {rel_error:e} exceeds {tolerance:e}")]
    GradientCheck { rel_error: f64, tolerance: f64 },

    #[error("every sampled point produced a rank-deficient Hessian; shrink the network or loosen rank_tol")]
    AllRankDeficient,

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
