use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh dimensions: {0}")]
    Dimensions(String),

    #[error("mesh validation failed: {0}")]
    InvalidMesh(String),

    #[error("circumcenter outside its dual triangle for vertices {0:?}")]
    CircumcenterOutside(Vec<usize>),

    #[error("malformed container {path:?}: {msg}")]
    Format { path: Option<PathBuf>, msg: String },

    #[error("layer {layer} is dry on every cell")]
    DryLayer { layer: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("layer {layer} out-crops at {entity} {index}: thickness {value:e}")]
    OutCrop {
        layer: usize,
        entity: &'static str,
        index: usize,
        value: f64,
    },

    #[error("non-finite value in {field} (layer {layer}, index {index})")]
    NonFinite {
        field: &'static str,
        layer: usize,
        index: usize,
    },

    #[error("Krylov space exhausted at dimension {dim} with residual estimate {residual:e}")]
    KrylovNotConverged { dim: usize, residual: f64 },

    #[error("instability at step {step} (t = {time} s): {reason}")]
    Unstable {
        step: usize,
        time: f64,
        reason: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
