//! Encrypted transactions, Merkle-rooted blocks, an append-only ledger and
//! the voting rounds that commit blocks across cloud servers.

pub mod block;
pub mod consensus;
pub mod envelope;
pub mod error;
pub mod ledger;
pub mod merkle;
pub mod tx;

pub use block::{
    build_partial_block, complete_block, genesis_block, verify_block, verify_partial, BlockFault, BlockSigner,
    BlockVerifier, FullBlock, IbsBlockSigner, IbsBlockVerifier, PartialBlock,
};
pub use consensus::{Cluster, FaultAction, FaultConfig, FaultScript, RoundOutcome, TraceRecord};
pub use envelope::SealKey;
pub use error::{Error, Result};
pub use ledger::Ledger;
pub use merkle::merkle_root;
pub use tx::{decrypt_tx, encrypt_tx, EncryptedTransaction, Transaction};
