use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate interval [{a}, {b}]")]
    DegenerateInterval { a: f64, b: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("polygon is not simple: edges {0} and {1} intersect")]
    SelfIntersecting(usize, usize),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("point ({y}, {s}) lies outside the chart cylinder of radius {r}")]
    OutsideChart { y: f64, s: f64, r: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("coefficient matrix is not elliptic at ({x}, {y}): lambda_min = {lambda_min}")]
    NonElliptic { x: f64, y: f64, lambda_min: f64 },

    #[error("extended mesh is not mirror-symmetric at vertex {0}")]
    NonMirrorMesh(usize),

    #[error("no coercivity shift found below {cap}")]
    ShiftSearchExhausted { cap: f64 },

    #[error("singular system: pivot {pivot:e} at row {row}")]
    SingularSystem { row: usize, pivot: f64 },

    #[error("solver residual {0:e} exceeds tolerance")]
    ResidualTooLarge(f64),

    #[error("exponent out of range: {0}")]
    ExponentRange(String),

    #[error("counterexample search exceeded n = {cap}")]
    CounterexampleCap { cap: u64 },

    #[error("coefficient field lacks a Lipschitz bound for b")]
    MissingLipschitz,

    #[error("kernel probe at time 0 requested")]
    ZeroTime,

    #[error("parse error at {path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
