use thiserror::Error;

use crate::grid::Misalignment;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("line {line}: expected header key {expected}, found `{found}`")]
    HeaderKey {
        line: usize,
        expected: &'static str,
        found: String,
    },

    #[error("line {line}: invalid {key} value `{value}`")]
    HeaderValue {
        line: usize,
        key: &'static str,
        value: String,
    },

    #[error("line {line}: non-numeric cell `{token}`")]
    NonNumericCell { line: usize, token: String },

    #[error("line {line}: negative count {value}")]
    NegativeCount { line: usize, value: f64 },

    #[error("line {line}: expected {expected} cells (ncols x nrows), found {found}")]
    CellCount { line: usize, expected: usize, found: usize },

    #[error("grid has {found} cells, header requires {expected}")]
    CellBufferLength { expected: usize, found: usize },

    #[error("invalid grid header: {0}")]
    InvalidHeader(String),

    #[error("binarization threshold must be a positive finite number, got {0}")]
    InvalidThreshold(f64),

    #[error("aggregation factor must be at least 2, got {0}")]
    InvalidFactor(usize),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("grids are not aligned: {0}")]
    Misaligned(Misalignment),

    #[error("number of pyramid levels must be between 1 and {max}, got {levels}")]
    InvalidLevels { levels: usize, max: usize },

    #[error("malformed cross-scale trajectory {0}")]
    MalformedTrajectory(String),

    #[error("invalid probability mapping: {0}")]
    InvalidMapping(String),

    #[error("probability threshold must lie in [0, 1], got {0}")]
    InvalidTheta(f64),

    #[error("point {index}: non-finite coordinate ({x}, {y})")]
    NonFiniteCoordinate { index: usize, x: f64, y: f64 },

    #[error("point {index}: negative weight {weight}")]
    NegativeWeight { index: usize, weight: f64 },

    #[error("points CSV row {row}: {message}")]
    PointsCsv { row: usize, message: String },

    #[error("points CSV is missing required column `{0}`")]
    MissingColumn(&'static str),

    #[error("{role}: cell ({row}, {col}) lies outside a {nrows}x{ncols} lattice")]
    CellOutOfBounds {
        role: String,
        row: usize,
        col: usize,
        nrows: usize,
        ncols: usize,
    },

    #[error("isolation violated: {first} and {second} share level-{level} block {block:?}")]
    IsolationViolation {
        first: String,
        second: String,
        level: usize,
        block: (usize, usize),
    },

    #[error("random placement failed: {0}")]
    Placement(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
