use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by grid construction, resampling, analysis and file IO.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid field of view: axis {axis} has bounds [{lo}, {hi}]")]
    InvalidFov { axis: usize, lo: f64, hi: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate window: normalizing sum {sum:e} is below 1e-12")]
    DegenerateWindow { sum: f64 },

    #[error("degenerate kernel: m_w = {m_w:e}, the ratio M_w/m_w is unusable")]
    DegenerateKernel { m_w: f64 },

    #[error("field of view mismatch between source and target grids")]
    FovMismatch,

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimMismatch { expected: [usize; 3], found: [usize; 3] },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("non-finite value at linear index {index}")]
    NonFinite { index: usize },

    #[error("invalid labels: {0}")]
    InvalidLabels(String),

    #[error("VOI {label} is empty")]
    EmptyVoi { label: usize },

    #[error("reference vector has zero norm")]
    ZeroNorm,

    #[error("total gradient is zero")]
    ZeroGradient,

    #[error("volume too small: {0}")]
    TooSmall(String),

    #[error("input is not piecewise constant: more than {limit} distinct values")]
    NotPiecewiseConstant { limit: usize },

    #[error("evaluation interval {k} is outside the bound's scope for N = {n}, a = {a}")]
    OutOfScope { k: usize, n: usize, a: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: corrupt file: {reason}")]
    CorruptFile { path: PathBuf, reason: String },

    #[error("{path}: unsupported: {reason}")]
    Unsupported { path: PathBuf, reason: String },

    #[error("label {label} does not fit in u16")]
    LabelOverflow { label: u32 },
}

pub type Result<T> = std::result::Result<T, Error>;
