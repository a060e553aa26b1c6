use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while validating configuration or building a scene.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("invalid value for `{field}`: {reason}")]
    InvalidValue { field: &'static str, reason: String },
    #[error("waypoint {index} at ({x:.3}, {y:.3}) is inside or too close to a wall")]
    WaypointInWall { index: usize, x: f64, y: f64 },
    #[error(
        "obstacle blocks the corridor entirely (free gap {gap:.3} m, drone needs {needed:.3} m)"
    )]
    CorridorBlocked { gap: f64, needed: f64 },
    #[error("unknown config preset `{0}`")]
    UnknownPreset(String),
    #[error("failed to parse config: {0}")]
    Parse(String),
}

#[derive(Debug, Error)]
pub enum FaultError {
    #[error("deviation matrix needs at least one guideword and one parameter")]
    EmptyMatrix,
    #[error("guideword {guideword} cannot target parameter {parameter}")]
    InvalidPairing {
        guideword: &'static str,
        parameter: &'static str,
    },
    #[error("fault magnitude must be positive and finite, got {0}")]
    BadMagnitude(f64),
    #[error("cannot parse fault `{input}`: {reason}")]
    Parse { input: String, reason: String },
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("violation id `{0}` already issued in this campaign")]
pub struct DuplicateIdError(pub String);

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Fault(#[from] FaultError),
    #[error(transparent)]
    DuplicateId(#[from] DuplicateIdError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed log: {0}")]
    Json(#[from] serde_json::Error),
    #[error("log failed schema validation: {0}")]
    Schema(String),
    #[error("malformed trajectory csv: {0}")]
    Csv(String),
    #[error("episode index {index} out of range (log has {len} episodes)")]
    NoSuchEpisode { index: usize, len: usize },
}

impl CampaignError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CampaignError::Io {
            path: path.into(),
            source,
        }
    }
}
