use std::path::PathBuf;

use crate::trajectory::Snapshot;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("cell index {cell} out of range for {n_cells} cells")]
    CellOutOfRange { cell: usize, n_cells: usize },

    #[error("field has {got} values, grid has {expected} cells")]
    FieldSize { expected: usize, got: usize },

    #[error("screened Poisson solve did not converge after {iterations} iterations (relative residual {residual:e})")]
    SolverDiverged { iterations: usize, residual: f64 },

    #[error("non-finite or runaway value at t = {t}: max |omega| = {max_abs}")]
    BlowUp {
        t: f64,
        max_abs: f64,
        snapshot: Box<Snapshot>,
    },

    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error("invalid config: {0}")]
    ConfigInvalid(String),

    #[error("snapshot {path}: {reason}")]
    Snapshot { path: PathBuf, reason: String },

    #[error("no snapshots in {0}")]
    NoSnapshots(PathBuf),

    #[error("insufficient snapshots: {0}")]
    InsufficientSnapshots(String),

    #[error("invalid test function: {0}")]
    InvalidTestFunction(String),

    #[error("trajectory has no stored gradient snapshots")]
    MissingGradients,

    #[error("grids are not nested: {0}")]
    NonNested(String),

    #[error("depth {depth} exceeds domain half-width {half_width}")]
    DepthTooLarge { depth: f64, half_width: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
