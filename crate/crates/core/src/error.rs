use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the recognition pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),

    #[error("format error in {}: {message}", path.display())]
    Format { path: PathBuf, message: String },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("truncated frame: expected {expected} payload bytes, got {got}")]
    Truncated { expected: usize, got: usize },

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("parse error at {line}:{column}: {message}")]
    Parse { line: u32, column: u32, message: String },

    #[error("unsupported feature: {0}")]
    Unsupported(String),

    #[error("tracking lost: target degenerated to {width:.1}x{height:.1} px")]
    TrackingLost { width: f64, height: f64 },

    #[error("initialization failed: {0}")]
    Init(String),

    #[error("point is behind the camera (depth {depth:.3} m)")]
    Frustum { depth: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
