use pqmiss_core::hash::{merkle_leaf, merkle_node, Digest};

use crate::error::{Error, Result};

/// Binary Merkle root. Leaves are `H(0x06 ‖ leaf)`, nodes `H(0x07 ‖ l ‖ r)`,
/// and an odd level pairs its last node with itself.
pub fn merkle_root<L: AsRef<[u8]>>(leaves: &[L]) -> Result<Digest> {
    if leaves.is_empty() {
        return Err(Error::EmptyLeaves);
    }
    let mut level: Vec<Digest> = leaves.iter().map(|l| merkle_leaf(l.as_ref())).collect();
    while level.len() > 1 {
        level = level
            .chunks(2)
            .map(|pair| merkle_node(&pair[0], pair.get(1).unwrap_or(&pair[0])))
            .collect();
    }
    Ok(level[0])
}
