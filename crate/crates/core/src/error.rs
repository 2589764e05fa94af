use thiserror::Error;

/// Errors raised by mesh construction, basis setup and operator assembly.
#[derive(Debug, Error)]
pub enum Error {
    #[error("background cells are not square: hx = {hx}, hy = {hy}")]
    NonSquareCells { hx: f64, hy: f64 },
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("degenerate geometry in cell {cell}: {reason}")]
    GeometryDegenerate { cell: usize, reason: String },
    #[error("basis conditioning failure on cell {cell} (alpha = {alpha:e}): gram deviation {deviation:e}")]
    BasisConditioningFailure { cell: usize, alpha: f64, deviation: f64 },
    #[error("boundary face {face} is not planar")]
    NonPlanarFace { face: usize },
    #[error("small cell {cell} has {count} boundary faces, at most one is supported")]
    MultipleBoundaryFaces { cell: usize, count: usize },
    #[error("field does not match mesh: {0}")]
    MeshFieldMismatch(String),
    #[error("stabilizer does not match mesh: {0}")]
    StabilizerMeshMismatch(String),
    #[error("mesh assumptions violated: {0}")]
    AssumptionViolated(String),
    #[error("non-finite coefficient in cell {cell} at t = {t}")]
    NonFinite { cell: usize, t: f64 },
    #[error("identity verification failed: {0}")]
    VerificationFailed(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
