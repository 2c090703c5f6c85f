use thiserror::Error;

use crate::metric::PointId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point id {id} out of range for a space of {len} points")]
    InvalidPoint { id: PointId, len: usize },

    #[error("duplicate points {0} and {1} (distance zero)")]
    DuplicatePoints(PointId, PointId),

    #[error("annulus radii out of order: r1 = {r1} > r2 = {r2}")]
    AnnulusOrder { r1: f64, r2: f64 },

    #[error("operation needs at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("not a metric: {0}")]
    NotMetric(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("parameter out of range: {0}")]
    Parameter(String),

    #[error("edge ({u}, {v}) has conflicting weights {a} and {b}")]
    WeightMismatch { u: PointId, v: PointId, a: f64, b: f64 },

    #[error("no annulus radius passed the quarter-weight test around point {center} at level {level}: {diagnostics}")]
    NoAnnulus {
        center: PointId,
        level: i32,
        diagnostics: String,
    },

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
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
