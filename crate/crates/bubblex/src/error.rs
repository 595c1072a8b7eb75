use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("not a simplicial decomposition: {0}")]
    NotADecomposition(String),
    #[error("degenerate cell {0}")]
    DegenerateCell(String),
    #[error("inconsistent dimension: {0}")]
    InconsistentDim(String),
    #[error("unknown simplex {0}")]
    UnknownSimplex(String),
    #[error("form degree overflow: {0}")]
    DegreeOverflow(String),
    #[error("forms live on different meshes or anchors: {0}")]
    MeshMismatch(String),
    #[error("degree mismatch: {0}")]
    DegreeMismatch(String),
    #[error("{0} is not a face of the anchor")]
    NotAFace(String),
    #[error("not divisible by b^{power}: {detail}")]
    NotDivisible { power: usize, detail: String },
    #[error("chain is not closed: {0}")]
    NotClosed(String),
    #[error("no solution: {0}")]
    NoSolution(String),
    #[error("incompatible target at {0}")]
    Incompatible(String),
    #[error("link complex is not exact: {0}")]
    NonExactLink(String),
    #[error("index mismatch: {0}")]
    IndexMismatch(String),
    #[error("singular evaluation point: {0}")]
    SingularPoint(String),
    #[error("nonconforming form, witness face {0}")]
    Nonconforming(String),
    #[error("construction check failed: {0}")]
    ConstructionFailed(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
