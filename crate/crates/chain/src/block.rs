//! Fog-built partial blocks and cloud-completed, hash-chained full blocks.

use std::fmt;
use std::sync::Arc;

use pqmiss_core::codec::{put_bytes, put_u32, put_u64, Reader};
use pqmiss_core::hash::{sha3_256, Digest};
use pqmiss_core::ibs::{self, MasterPublicKey, UserSecretKey};
use pqmiss_core::PrimeField;
use rand::RngCore;

use crate::error::{Error, Result};
use crate::merkle::merkle_root;
use crate::tx::EncryptedTransaction;

pub const BLOCK_MAGIC: &[u8; 4] = b"PQB1";
pub const BLOCK_VERSION: u32 = 1;
pub const DEFAULT_BLOCK_CAPACITY: usize = 30;
pub const GENESIS_APP_TYPE: &str = "GENESIS";
pub const ZERO_HASH: Digest = [0u8; 32];

/// Signs partial-block headers on behalf of a block owner.
pub trait BlockSigner {
    fn owner_id(&self) -> &[u8];
    /// Verification material published inside the block.
    fn owner_pub(&self) -> Vec<u8>;
    fn sign(&self, msg: &[u8], rng: &mut dyn RngCore) -> Result<Vec<u8>>;
}

pub trait BlockVerifier: Send + Sync {
    fn verify(&self, owner_id: &[u8], owner_pub: &[u8], msg: &[u8], sig: &[u8]) -> bool;
}

/// Identity-based block signer; the published verification material is the
/// owner identity itself.
#[derive(Clone, Debug)]
pub struct IbsBlockSigner<F> {
    mpk: Arc<MasterPublicKey<F>>,
    usk: UserSecretKey<F>,
}

impl<F: PrimeField> IbsBlockSigner<F> {
    pub fn new(mpk: Arc<MasterPublicKey<F>>, usk: UserSecretKey<F>) -> Self {
        Self { mpk, usk }
    }
}

impl<F: PrimeField> BlockSigner for IbsBlockSigner<F> {
    fn owner_id(&self) -> &[u8] {
        &self.usk.id
    }

    fn owner_pub(&self) -> Vec<u8> {
        self.usk.id.clone()
    }

    fn sign(&self, msg: &[u8], rng: &mut dyn RngCore) -> Result<Vec<u8>> {
        let sig = ibs::sign(&self.mpk, &self.usk, msg, rng)?;
        Ok(sig.encode(self.mpk.params()))
    }
}

#[derive(Clone, Debug)]
pub struct IbsBlockVerifier<F> {
    mpk: Arc<MasterPublicKey<F>>,
}

impl<F: PrimeField> IbsBlockVerifier<F> {
    pub fn new(mpk: Arc<MasterPublicKey<F>>) -> Self {
        Self { mpk }
    }
}

impl<F: PrimeField + Send + Sync> BlockVerifier for IbsBlockVerifier<F> {
    fn verify(&self, owner_id: &[u8], owner_pub: &[u8], msg: &[u8], sig: &[u8]) -> bool {
        owner_id == owner_pub && ibs::verify_encoded(&self.mpk, owner_id, msg, sig).is_accept()
    }
}

/// First failing check of a block, in checking order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BlockFault {
    Mtr,
    Signature,
    Hash,
    Chain,
}

impl fmt::Display for BlockFault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BlockFault::Mtr => "MTR",
            BlockFault::Signature => "signature",
            BlockFault::Hash => "hash",
            BlockFault::Chain => "chain",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialBlock {
    pub etx: Vec<EncryptedTransaction>,
    pub mtr: Digest,
    pub ts_blk: u64,
    pub app_type: String,
    pub owner_id: Vec<u8>,
    pub owner_pub: Vec<u8>,
    pub sig_blk: Vec<u8>,
}

fn etx_root(etx: &[EncryptedTransaction]) -> Result<Digest> {
    let leaves: Vec<Vec<u8>> = etx.iter().map(EncryptedTransaction::encode).collect();
    merkle_root(&leaves)
}

impl PartialBlock {
    /// `H(ts ‖ mtr ‖ app_type ‖ owner_id ‖ owner_pub)`; `sig_blk` is excluded.
    pub fn header_digest(&self) -> Digest {
        let mut buf = Vec::new();
        put_u64(&mut buf, self.ts_blk);
        buf.extend_from_slice(&self.mtr);
        put_bytes(&mut buf, self.app_type.as_bytes());
        put_bytes(&mut buf, &self.owner_id);
        put_bytes(&mut buf, &self.owner_pub);
        sha3_256(&[&buf])
    }

    pub fn encode_into(&self, out: &mut Vec<u8>) {
        put_u64(out, self.ts_blk);
        out.extend_from_slice(&self.mtr);
        put_bytes(out, self.app_type.as_bytes());
        put_bytes(out, &self.owner_id);
        put_bytes(out, &self.owner_pub);
        put_bytes(out, &self.sig_blk);
        put_u32(out, self.etx.len() as u32);
        for e in &self.etx {
            put_bytes(out, &e.encode());
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.encode_into(&mut out);
        out
    }

    pub fn decode_from(r: &mut Reader<'_>) -> Result<Self> {
        let ts_blk = r.u64()?;
        let mtr = r.array::<32>()?;
        let app_type = String::from_utf8(r.bytes()?.to_vec())
            .map_err(|_| Error::Malformed("app_type is not UTF-8".into()))?;
        let owner_id = r.bytes()?.to_vec();
        let owner_pub = r.bytes()?.to_vec();
        let sig_blk = r.bytes()?.to_vec();
        let count = r.u32()? as usize;
        if count > r.remaining() {
            return Err(Error::Malformed("transaction count exceeds input".into()));
        }
        let etx = (0..count)
            .map(|_| {
                let mut inner = Reader::new(r.bytes()?);
                let e = EncryptedTransaction::decode_from(&mut inner)?;
                inner.finish()?;
                Ok(e)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            etx,
            mtr,
            ts_blk,
            app_type,
            owner_id,
            owner_pub,
            sig_blk,
        })
    }
}

pub fn build_partial_block(
    etx: Vec<EncryptedTransaction>,
    signer: &dyn BlockSigner,
    app_type: &str,
    ts_blk: u64,
    capacity: usize,
    rng: &mut dyn RngCore,
) -> Result<PartialBlock> {
    if etx.is_empty() {
        return Err(Error::EmptyBlock);
    }
    if etx.len() > capacity {
        return Err(Error::Capacity {
            capacity,
            got: etx.len(),
        });
    }
    let mut par = PartialBlock {
        mtr: etx_root(&etx)?,
        etx,
        ts_blk,
        app_type: app_type.to_owned(),
        owner_id: signer.owner_id().to_vec(),
        owner_pub: signer.owner_pub(),
        sig_blk: Vec::new(),
    };
    par.sig_blk = signer.sign(&par.header_digest(), rng)?;
    Ok(par)
}

/// Checks the Merkle root, then the owner signature.
pub fn verify_partial(par: &PartialBlock, verifier: &dyn BlockVerifier) -> std::result::Result<(), BlockFault> {
    match etx_root(&par.etx) {
        Ok(root) if root == par.mtr => {}
        _ => return Err(BlockFault::Mtr),
    }
    if !verifier.verify(&par.owner_id, &par.owner_pub, &par.header_digest(), &par.sig_blk) {
        return Err(BlockFault::Signature);
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FullBlock {
    pub version: u32,
    pub prev_hash: Digest,
    pub cur_hash: Digest,
    pub partial: PartialBlock,
}

/// `H(version ‖ prev_hash ‖ encode(partial))`.
pub fn block_hash(version: u32, prev_hash: &Digest, partial: &PartialBlock) -> Digest {
    let mut buf = Vec::new();
    put_u32(&mut buf, version);
    buf.extend_from_slice(prev_hash);
    partial.encode_into(&mut buf);
    sha3_256(&[&buf])
}

pub fn complete_block(
    partial: PartialBlock,
    prev_hash: Digest,
    version: u32,
    verifier: &dyn BlockVerifier,
) -> Result<FullBlock> {
    verify_partial(&partial, verifier).map_err(Error::InvalidBlock)?;
    Ok(FullBlock {
        version,
        prev_hash,
        cur_hash: block_hash(version, &prev_hash, &partial),
        partial,
    })
}

/// Checks MTR, owner signature, current hash and chain linkage, in that order.
pub fn verify_block(
    blk: &FullBlock,
    expected_prev: &Digest,
    verifier: &dyn BlockVerifier,
) -> std::result::Result<(), BlockFault> {
    verify_partial(&blk.partial, verifier)?;
    if block_hash(blk.version, &blk.prev_hash, &blk.partial) != blk.cur_hash {
        return Err(BlockFault::Hash);
    }
    if &blk.prev_hash != expected_prev {
        return Err(BlockFault::Chain);
    }
    Ok(())
}

impl FullBlock {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(BLOCK_MAGIC);
        put_u32(&mut out, self.version);
        out.extend_from_slice(&self.prev_hash);
        out.extend_from_slice(&self.cur_hash);
        self.partial.encode_into(&mut out);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        if r.take(4)? != BLOCK_MAGIC {
            return Err(Error::Malformed("bad magic, expected PQB1".into()));
        }
        let version = r.u32()?;
        let prev_hash = r.array::<32>()?;
        let cur_hash = r.array::<32>()?;
        let partial = PartialBlock::decode_from(&mut r)?;
        r.finish()?;
        Ok(Self {
            version,
            prev_hash,
            cur_hash,
            partial,
        })
    }

    pub fn is_genesis(&self) -> bool {
        self.prev_hash == ZERO_HASH && self.partial.app_type == GENESIS_APP_TYPE
    }
}

/// Version 1, zero previous hash, one opaque placeholder transaction.
pub fn genesis_block(
    signer: &dyn BlockSigner,
    ts: u64,
    verifier: &dyn BlockVerifier,
    rng: &mut dyn RngCore,
) -> Result<FullBlock> {
    let placeholder = EncryptedTransaction {
        ciphertext: b"genesis".to_vec(),
        nonce: [0u8; 24],
        owner_key_id: Vec::new(),
    };
    let par = build_partial_block(vec![placeholder], signer, GENESIS_APP_TYPE, ts, 1, rng)?;
    complete_block(par, ZERO_HASH, BLOCK_VERSION, verifier)
}


#[cfg(test)]
mod tests {
    use super::testkit::kit;
    use super::*;

    #[test]
    fn partial_verifies_and_binds_app_type() {
        let mut k = kit(10);
        let mut par = k.partial(3, 1000);
        assert_eq!(verify_partial(&par, &k.verifier), Ok(()));
        par.app_type.push('x');
        assert_eq!(verify_partial(&par, &k.verifier), Err(BlockFault::Signature));
    }

    #[test]
    fn capacity_and_empty() {
        let mut k = kit(11);
        let etx = k.etx(31);
        let err = build_partial_block(etx.clone(), &k.signer, "t", 1, 30, &mut k.rng).unwrap_err();
        assert!(matches!(err, Error::Capacity { capacity: 30, got: 31 }));
        build_partial_block(etx[..30].to_vec(), &k.signer, "t", 1, 30, &mut k.rng).unwrap();
        assert!(matches!(
            build_partial_block(vec![], &k.signer, "t", 1, 30, &mut k.rng),
            Err(Error::EmptyBlock)
        ));
    }

    #[test]
    fn owner_pub_must_match_owner() {
        let mut k = kit(12);
        let mut par = k.partial(2, 5);
        par.owner_pub = k.other.owner_pub();
        assert_eq!(verify_partial(&par, &k.verifier), Err(BlockFault::Signature));
    }

    #[test]
    fn chain_of_two_and_checks_in_order() {
        let mut k = kit(13);
        let g = k.genesis();
        assert!(g.is_genesis());
        assert_eq!(g.version, 1);
        assert_eq!(verify_block(&g, &ZERO_HASH, &k.verifier), Ok(()));
        let p = k.partial(4, 2000);
        let b1 = complete_block(p, g.cur_hash, BLOCK_VERSION, &k.verifier).unwrap();
        assert_eq!(b1.prev_hash, g.cur_hash);
        assert_eq!(verify_block(&b1, &g.cur_hash, &k.verifier), Ok(()));
        assert_eq!(verify_block(&b1, &ZERO_HASH, &k.verifier), Err(BlockFault::Chain));

        let mut bad = b1.clone();
        bad.partial.etx[1].ciphertext[0] ^= 1;
        assert_eq!(verify_block(&bad, &g.cur_hash, &k.verifier), Err(BlockFault::Mtr));
        let mut bad = b1.clone();
        bad.cur_hash[0] ^= 1;
        assert_eq!(verify_block(&bad, &g.cur_hash, &k.verifier), Err(BlockFault::Hash));
        let mut bad = b1.clone();
        bad.version = 2;
        assert_eq!(verify_block(&bad, &g.cur_hash, &k.verifier), Err(BlockFault::Hash));
    }

    #[test]
    fn complete_rejects_invalid_partial() {
        let mut k = kit(14);
        let mut p = k.partial(2, 9);
        p.mtr[0] ^= 1;
        assert!(matches!(
            complete_block(p, ZERO_HASH, 1, &k.verifier),
            Err(Error::InvalidBlock(BlockFault::Mtr))
        ));
    }

    #[test]
    fn block_file_round_trip() {
        let mut k = kit(15);
        let g = k.genesis();
        let b = complete_block(k.partial(5, 77), g.cur_hash, 1, &k.verifier).unwrap();
        let bytes = b.encode();
        assert_eq!(&bytes[..4], BLOCK_MAGIC);
        assert_eq!(FullBlock::decode(&bytes).unwrap(), b);
        assert!(FullBlock::decode(&bytes[..bytes.len() - 1]).is_err());
    }
}
