use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {0}: {1}")]
    AtLine(usize, Box<Error>),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid label: {0}")]
    InvalidLabel(String),
    #[error("nonpositive weight `{0}`")]
    NonpositiveWeight(String),
    #[error("duplicate identifier `{0}`")]
    DuplicateId(String),
    #[error("transition `{0}` is not enabled")]
    NotEnabled(String),
    #[error("state cap of {cap} states exceeded; witness path: {witness}")]
    StateCapExceeded { cap: usize, witness: String },
    #[error("final marking {0} is reachable but not a deadlock")]
    FinalNotDeadlock(String),
    #[error("{0}")]
    Analysis(String),
    #[error("internal solver error: {0}")]
    Solver(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
