use std::path::PathBuf;

use thiserror::Error;

use crate::geometry::BBox;

#[derive(Debug, Error)]
pub enum LayoutError {
    #[error("canvas dimensions must be positive and finite, got {width}x{height}")]
    InvalidCanvas { width: f64, height: f64 },
    #[error("invalid box {0:?}: coordinates must be finite with non-negative size")]
    InvalidBox(BBox),
    #[error("unknown element category `{0}`")]
    UnknownCategory(String),
    #[error("document has no `canvas` object")]
    MissingCanvas,
    #[error("canvas manifest lists no elements")]
    EmptyManifest,
    #[error("element {0} is missing geometry")]
    MissingGeometry(usize),
    #[error("malformed layout document: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Error, PartialEq)]
pub enum RewardError {
    #[error("layout has no elements to score")]
    EmptyLayout,
    #[error("reference layout is empty; set lambda_u to 0 when no ground truth exists")]
    EmptyReference,
    #[error("invalid reward weights: {0}")]
    InvalidWeights(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum GrpoError {
    #[error("group of {0} candidate(s) has no relative baseline; need at least 2")]
    GroupTooSmall(usize),
    #[error("non-finite reward at index {0}")]
    NonFiniteReward(usize),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("no parseable records in {path} ({skipped} skipped)")]
    NoRecords { path: PathBuf, skipped: usize },
    #[error("malformed {format} input: {message}")]
    Malformed { format: &'static str, message: String },
}

#[derive(Debug, Error)]
pub enum RolloutError {
    #[error("invalid backend configuration: {0}")]
    Config(String),
    #[error("every candidate in the group for canvas `{canvas_id}` failed; last error: {last_error}")]
    AllFailed { canvas_id: String, last_error: String },
    #[error("no recorded responses for canvas `{0}`")]
    ReplayMissing(String),
    #[error("replay log holds {available} response(s) for canvas `{canvas_id}`, {requested} requested")]
    ReplayShort { canvas_id: String, available: usize, requested: usize },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Grpo(#[from] GrpoError),
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("update diverged at iteration {iteration}: {detail}")]
    Diverged { iteration: usize, detail: String },
    #[error(transparent)]
    Reward(#[from] RewardError),
    #[error(transparent)]
    Grpo(#[from] GrpoError),
}
