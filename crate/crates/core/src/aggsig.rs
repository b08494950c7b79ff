//! Multi-signer layer: per-device keys, local signing and verification, and
//! aggregation of a verified batch under one aggregator signature.
//!
//! An aggregate carries every member `(ID_i, m_i, σ_i)` together with one
//! signature by the aggregator over the digest of the canonically ordered
//! batch. Checking the aggregate costs a single signature verification; the
//! `deep` mode re-verifies every member as well.

use std::collections::HashSet;

use rand::Rng;

use crate::codec::{put_bytes, put_u32, Reader};
use crate::error::{Error, Result};
use crate::gf::PrimeField;
use crate::hash::{hash1, tag, Digest};
use crate::ibs::{self, put_signature, IbsSignature, MasterPublicKey, MasterSecretKey, UserSecretKey};
use crate::params::ParamSet;
use crate::verdict::{RejectReason, Verdict};

/// One signer's message and signature; all members share the system `Mpk`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignedMessage<F> {
    pub signer_id: Vec<u8>,
    pub msg: Vec<u8>,
    pub sig: IbsSignature<F>,
}

impl<F: PrimeField> SignedMessage<F> {
    pub fn encode(&self, params: &ParamSet) -> Vec<u8> {
        let mut out = Vec::new();
        put_bytes(&mut out, &self.signer_id);
        put_bytes(&mut out, &self.msg);
        put_signature(&mut out, params, &self.sig);
        out
    }

    pub fn decode(bytes: &[u8], params: &ParamSet) -> Result<Self> {
        let mut r = Reader::new(bytes);
        let signer_id = r.bytes()?.to_vec();
        let msg = r.bytes()?.to_vec();
        let (p, sig) = IbsSignature::decode(r.bytes()?)?;
        r.finish()?;
        if &p != params {
            return Err(Error::Malformed("member signature profile mismatch".into()));
        }
        Ok(Self { signer_id, msg, sig })
    }

    fn is_complete(&self, params: &ParamSet) -> bool {
        let (n, m, psi) = (params.n(), params.m(), params.psi);
        self.sig.comm.len() == psi
            && self.sig.res1.len() == psi
            && self.sig.res2.len() == psi
            && self.sig.res1.iter().all(|r| r.g1.len() == n && r.h1.len() == m)
            && self.sig.res2.iter().all(|f| f.len() == n)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AggregateSignature<F> {
    pub batch_digest: Digest,
    pub agg_sig: IbsSignature<F>,
    pub agg_id: Vec<u8>,
    /// Canonically ordered by `(signer_id, msg)`.
    pub batch: Vec<SignedMessage<F>>,
}

/// Secret keys for every signer plus the aggregator.
#[derive(Clone, Debug)]
pub struct Keyring<F> {
    pub signers: Vec<UserSecretKey<F>>,
    pub aggregator: UserSecretKey<F>,
}

/// Extracts one key per signer identity and one for the aggregator.
pub fn keygen_all<F: PrimeField>(
    msk: &MasterSecretKey<F>,
    signer_ids: &[Vec<u8>],
    agg_id: &[u8],
) -> Result<Keyring<F>> {
    let mut seen = HashSet::new();
    for id in signer_ids.iter().map(Vec::as_slice).chain(std::iter::once(agg_id)) {
        if !seen.insert(id) {
            return Err(Error::DuplicateIdentity(String::from_utf8_lossy(id).into_owned()));
        }
    }
    let signers = signer_ids
        .iter()
        .map(|id| ibs::extract(msk, id))
        .collect::<Result<_>>()?;
    Ok(Keyring {
        signers,
        aggregator: ibs::extract(msk, agg_id)?,
    })
}

/// Local signing by one device.
pub fn ls_sign<F: PrimeField, R: Rng + ?Sized>(
    mpk: &MasterPublicKey<F>,
    usk: &UserSecretKey<F>,
    msg: &[u8],
    rng: &mut R,
) -> Result<IbsSignature<F>> {
    ibs::sign(mpk, usk, msg, rng)
}

/// Local verification of one device signature.
pub fn ls_ver<F: PrimeField>(
    mpk: &MasterPublicKey<F>,
    signer_id: &[u8],
    msg: &[u8],
    sig: &IbsSignature<F>,
) -> Verdict {
    ibs::verify(mpk, signer_id, msg, sig)
}

/// Wire encodings of the members, each signature encoded once, and the
/// canonical order: indices sorted by `(signer_id, msg, signature bytes)`.
fn canonical_encodings<F: PrimeField>(batch: &[SignedMessage<F>], params: &ParamSet) -> (Vec<usize>, Vec<Vec<u8>>) {
    let sigs: Vec<Vec<u8>> = batch.iter().map(|m| m.sig.encode(params)).collect();
    let mut order: Vec<usize> = (0..batch.len()).collect();
    order.sort_by(|&a, &b| {
        (&batch[a].signer_id, &batch[a].msg, &sigs[a]).cmp(&(&batch[b].signer_id, &batch[b].msg, &sigs[b]))
    });
    let members = batch
        .iter()
        .zip(sigs)
        .map(|(m, sig)| {
            let mut out = Vec::with_capacity(12 + m.signer_id.len() + m.msg.len() + sig.len());
            put_bytes(&mut out, &m.signer_id);
            put_bytes(&mut out, &m.msg);
            put_bytes(&mut out, &sig);
            out
        })
        .collect();
    (order, members)
}

/// `Hash₁(0x08 ‖ count ‖ lp(member)…)` streamed over the members in `order`.
fn digest_in_order(order: &[usize], members: &[Vec<u8>]) -> Digest {
    let count = (order.len() as u32).to_le_bytes();
    let lens: Vec<[u8; 4]> = members.iter().map(|m| (m.len() as u32).to_le_bytes()).collect();
    let mut parts: Vec<&[u8]> = Vec::with_capacity(2 + 2 * order.len());
    parts.push(&[tag::BATCH]);
    parts.push(&count);
    for &i in order {
        parts.push(&lens[i]);
        parts.push(&members[i]);
    }
    hash1(&parts)
}

fn encode_batch<F: PrimeField>(batch: &[SignedMessage<F>], params: &ParamSet) -> Vec<u8> {
    let mut out = Vec::new();
    put_u32(&mut out, batch.len() as u32);
    for m in batch {
        put_bytes(&mut out, &m.encode(params));
    }
    out
}

/// Digest `Hash₁(0x08 ‖ batch)` over the canonically ordered batch.
pub fn batch_digest<F: PrimeField>(batch: &[SignedMessage<F>], params: &ParamSet) -> Digest {
    let (order, members) = canonical_encodings(batch, params);
    digest_in_order(&order, &members)
}

/// Aggregator signing. Callers must already have accepted every member with
/// [`ls_ver`]; only structural completeness is re-checked here.
pub fn la_sign<F: PrimeField, R: Rng + ?Sized>(
    mpk: &MasterPublicKey<F>,
    agg_usk: &UserSecretKey<F>,
    batch: Vec<SignedMessage<F>>,
    rng: &mut R,
) -> Result<AggregateSignature<F>> {
    let params = mpk.params();
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if let Some(i) = batch.iter().position(|m| !m.is_complete(params)) {
        return Err(Error::Malformed(format!("batch member {i} is structurally incomplete")));
    }
    let (order, members) = canonical_encodings(&batch, params);
    let d = digest_in_order(&order, &members);
    let mut slots: Vec<Option<SignedMessage<F>>> = batch.into_iter().map(Some).collect();
    let batch: Vec<SignedMessage<F>> = order.iter().map(|&i| slots[i].take().expect("order is a permutation")).collect();
    let agg_sig = ibs::sign(mpk, agg_usk, &d, rng)?;
    Ok(AggregateSignature {
        batch_digest: d,
        agg_sig,
        agg_id: agg_usk.id.clone(),
        batch,
    })
}

/// Cost counters from one aggregate verification.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct VerifyStats {
    pub signature_verifications: usize,
}

/// Aggregate verification.
pub fn la_ver<F: PrimeField>(mpk: &MasterPublicKey<F>, agg: &AggregateSignature<F>, deep: bool) -> Verdict {
    la_ver_with_stats(mpk, agg, deep).0
}

pub fn la_ver_with_stats<F: PrimeField>(
    mpk: &MasterPublicKey<F>,
    agg: &AggregateSignature<F>,
    deep: bool,
) -> (Verdict, VerifyStats) {
    let mut stats = VerifyStats::default();
    let params = mpk.params();
    if agg.batch.is_empty() {
        return (Verdict::Reject(RejectReason::Malformed("empty batch".into())), stats);
    }
    if let Some(i) = agg.batch.iter().position(|m| !m.is_complete(params)) {
        return (
            Verdict::Reject(RejectReason::Malformed(format!("member {i} incomplete"))),
            stats,
        );
    }
    let d = batch_digest(&agg.batch, params);
    if d != agg.batch_digest {
        return (Verdict::Reject(RejectReason::BatchDigest), stats);
    }
    stats.signature_verifications += 1;
    if let Verdict::Reject(r) = ibs::verify(mpk, &agg.agg_id, &d, &agg.agg_sig) {
        return (Verdict::Reject(RejectReason::Aggregator(Box::new(r))), stats);
    }
    if deep {
        for (index, m) in agg.batch.iter().enumerate() {
            stats.signature_verifications += 1;
            if let Verdict::Reject(r) = ls_ver(mpk, &m.signer_id, &m.msg, &m.sig) {
                return (
                    Verdict::Reject(RejectReason::Member {
                        index,
                        reason: Box::new(r),
                    }),
                    stats,
                );
            }
        }
    }
    (Verdict::Accept, stats)
}

impl<F: PrimeField> AggregateSignature<F> {
    /// Member count, each member length-prefixed, the aggregator id
    /// length-prefixed, then the aggregator signature.
    pub fn encode(&self, params: &ParamSet) -> Vec<u8> {
        let mut out = encode_batch(&self.batch, params);
        put_bytes(&mut out, &self.agg_id);
        out.extend_from_slice(&self.agg_sig.encode(params));
        out
    }

    /// The digest is recomputed from the carried batch.
    pub fn decode(bytes: &[u8], params: &ParamSet) -> Result<Self> {
        let mut r = Reader::new(bytes);
        let count = r.u32()? as usize;
        if count > r.remaining() {
            return Err(Error::Malformed("member count exceeds input".into()));
        }
        let batch = (0..count)
            .map(|_| SignedMessage::decode(r.bytes()?, params))
            .collect::<Result<Vec<_>>>()?;
        let agg_id = r.bytes()?.to_vec();
        let (p, agg_sig) = IbsSignature::decode(r.rest())?;
        if &p != params {
            return Err(Error::Malformed("aggregate signature profile mismatch".into()));
        }
        Ok(Self {
            batch_digest: batch_digest(&batch, params),
            agg_sig,
            agg_id,
            batch,
        })
    }
}
