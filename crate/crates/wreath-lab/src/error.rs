use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid group table: {0}")]
    InvalidGroup(String),
    #[error("invalid representation: {0}")]
    InvalidRep(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("elements belong to different base groups")]
    GroupMismatch,
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("expansion budget exceeded: {needed} terms (limit {limit})")]
    Budget { needed: u128, limit: u128 },
    #[error("{0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
