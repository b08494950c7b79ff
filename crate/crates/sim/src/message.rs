//! Device collection messages, fog-side admission and fog flushes.

use std::fmt;
use std::sync::Arc;

use pqmiss_chain::{build_partial_block, encrypt_tx, IbsBlockSigner, PartialBlock, Transaction};
use pqmiss_core::aggsig::{la_sign, ls_sign, ls_ver, SignedMessage};
use pqmiss_core::codec::{put_bytes, put_u64};
use pqmiss_core::{AggregateSignature31, Gf31, IbsSignature31, MasterPublicKey31};
use rand::{Rng, RngCore};

use crate::error::Result;
use crate::world::{DeviceRecord, FogRecord};

/// `m_i` plus its signature. `rts_start <= rts_end <= cts`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CollectionMessage {
    pub device_id: Vec<u8>,
    pub agg_id: Vec<u8>,
    pub rts_start: u64,
    pub rts_end: u64,
    pub data: Vec<u8>,
    pub cts: u64,
    pub sig: IbsSignature31,
}

/// Fixed bytes the message body adds around the payload: four length
/// prefixes and three timestamps, excluding the two identity strings.
pub const BODY_OVERHEAD: usize = 3 * 4 + 3 * 8;

impl CollectionMessage {
    /// The signed content.
    pub fn body(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.data.len() + BODY_OVERHEAD + self.device_id.len() + self.agg_id.len());
        put_bytes(&mut out, &self.device_id);
        put_bytes(&mut out, &self.agg_id);
        put_u64(&mut out, self.rts_start);
        put_u64(&mut out, self.rts_end);
        put_bytes(&mut out, &self.data);
        put_u64(&mut out, self.cts);
        out
    }

    /// The ledger transaction this message becomes once accepted.
    pub fn to_transaction(&self) -> Transaction {
        Transaction {
            sensed_data: self.body(),
            device_id: self.device_id.clone(),
            ts: self.cts,
        }
    }

    pub fn signed(&self) -> SignedMessage<Gf31> {
        SignedMessage {
            signer_id: self.device_id.clone(),
            msg: self.body(),
            sig: self.sig.clone(),
        }
    }
}

/// Builds and signs one message covering `[last send, now]`.
pub fn collect<R: Rng + ?Sized>(
    mpk: &MasterPublicKey31,
    device: &mut DeviceRecord,
    agg_id: &[u8],
    now: u64,
    payload_size: usize,
    rng: &mut R,
) -> Result<CollectionMessage> {
    let mut data = vec![0u8; payload_size];
    rng.fill_bytes(&mut data);
    let mut msg = CollectionMessage {
        device_id: device.id.clone(),
        agg_id: agg_id.to_vec(),
        rts_start: device.last_send.min(now),
        rts_end: now,
        data,
        cts: now,
        sig: IbsSignature31 {
            comm: Vec::new(),
            res1: Vec::new(),
            res2: Vec::new(),
        },
    };
    msg.sig = ls_sign(mpk, &device.usk, &msg.body(), rng)?;
    device.last_send = now;
    Ok(msg)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DropReason {
    Stale,
    BadSig,
    Misroute,
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DropReason::Stale => "stale",
            DropReason::BadSig => "badsig",
            DropReason::Misroute => "misroute",
        })
    }
}

/// Freshness, signature, then routing. Accepted messages are buffered.
pub fn fog_ingest(
    mpk: &MasterPublicKey31,
    fog: &mut FogRecord,
    msg: CollectionMessage,
    arrival_ts: u64,
    delta_t: u64,
) -> std::result::Result<(), DropReason> {
    if msg.cts.abs_diff(arrival_ts) >= delta_t {
        return Err(DropReason::Stale);
    }
    if !ls_ver(mpk, &msg.device_id, &msg.body(), &msg.sig).is_accept() {
        return Err(DropReason::BadSig);
    }
    if msg.agg_id != fog.agg_id {
        return Err(DropReason::Misroute);
    }
    fog.buffer.push(msg);
    Ok(())
}

/// Fog-to-cloud payload: the aggregate plus the partial blocks carrying the
/// encrypted transactions.
#[derive(Clone, Debug)]
pub struct FogPayload {
    pub fog_id: Vec<u8>,
    pub aggregate: AggregateSignature31,
    pub partials: Vec<PartialBlock>,
}

impl FogPayload {
    pub fn wire_len(&self, mpk: &MasterPublicKey31) -> usize {
        self.aggregate.encode(mpk.params()).len() + self.partials.iter().map(|p| p.encode().len()).sum::<usize>()
    }
}

/// Drains the buffer into one aggregate; returns it with the transactions
/// in arrival order. `None` when the buffer is empty.
pub fn aggregate_buffer<R: Rng + ?Sized>(
    mpk: &MasterPublicKey31,
    fog: &mut FogRecord,
    rng: &mut R,
) -> Result<Option<(AggregateSignature31, Vec<Transaction>)>> {
    if fog.buffer.is_empty() {
        return Ok(None);
    }
    let msgs = std::mem::take(&mut fog.buffer);
    let batch = msgs.iter().map(CollectionMessage::signed).collect();
    let agg = la_sign(mpk, &fog.agg_usk, batch, rng)?;
    Ok(Some((agg, msgs.iter().map(CollectionMessage::to_transaction).collect())))
}

/// Encrypts `txs` under the fog owner key and signs them as one partial block.
pub fn build_fog_block(
    mpk: &Arc<MasterPublicKey31>,
    fog: &FogRecord,
    txs: &[Transaction],
    app_type: &str,
    capacity: usize,
    now: u64,
    rng: &mut dyn RngCore,
) -> Result<PartialBlock> {
    let etx = txs.iter().map(|tx| encrypt_tx(tx, &fog.owner_key, rng)).collect();
    let signer = IbsBlockSigner::new(mpk.clone(), fog.agg_usk.clone());
    Ok(build_partial_block(etx, &signer, app_type, now, capacity, rng)?)
}

/// Aggregates the buffer and splits it into partial blocks of at most
/// `capacity` transactions.
pub fn fog_flush(
    mpk: &Arc<MasterPublicKey31>,
    fog: &mut FogRecord,
    app_type: &str,
    capacity: usize,
    now: u64,
    rng: &mut dyn RngCore,
) -> Result<Option<FogPayload>> {
    let Some((aggregate, txs)) = aggregate_buffer(mpk, fog, rng)? else {
        return Ok(None);
    };
    let partials = txs
        .chunks(capacity)
        .map(|chunk| build_fog_block(mpk, fog, chunk, app_type, capacity, now, rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(Some(FogPayload {
        fog_id: fog.agg_id.clone(),
        aggregate,
        partials,
    }))
}
