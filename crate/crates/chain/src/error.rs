use thiserror::Error;

use crate::block::BlockFault;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] pqmiss_core::Error),
    #[error("authentication failed: ciphertext or key is wrong")]
    Authentication,
    #[error("merkle root of an empty leaf set")]
    EmptyLeaves,
    #[error("a block needs at least one transaction")]
    EmptyBlock,
    #[error("{got} transactions exceed block capacity {capacity}")]
    Capacity { capacity: usize, got: usize },
    #[error("transaction timestamp must be positive")]
    ZeroTimestamp,
    #[error("block rejected: {0}")]
    InvalidBlock(BlockFault),
    #[error("block {0} already committed")]
    DuplicateBlock(String),
    #[error("malformed encoding: {0}")]
    Malformed(String),
    #[error("cluster error: {0}")]
    Cluster(String),
    #[error("fault script line {line}: {reason}")]
    FaultScript { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
