use pqmiss_core::codec::{put_bytes, put_u64, Reader};
use rand::RngCore;

use crate::envelope::{SealKey, Sealed, NONCE_LEN};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Transaction {
    pub sensed_data: Vec<u8>,
    pub device_id: Vec<u8>,
    /// Milliseconds, always > 0.
    pub ts: u64,
}

impl Transaction {
    pub fn new(sensed_data: Vec<u8>, device_id: Vec<u8>, ts: u64) -> Result<Self> {
        if ts == 0 {
            return Err(Error::ZeroTimestamp);
        }
        Ok(Self {
            sensed_data,
            device_id,
            ts,
        })
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.sensed_data.len() + self.device_id.len() + 16);
        put_bytes(&mut out, &self.sensed_data);
        put_bytes(&mut out, &self.device_id);
        put_u64(&mut out, self.ts);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        let sensed_data = r.bytes()?.to_vec();
        let device_id = r.bytes()?.to_vec();
        let ts = r.u64()?;
        r.finish()?;
        Self::new(sensed_data, device_id, ts)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncryptedTransaction {
    pub ciphertext: Vec<u8>,
    pub nonce: [u8; NONCE_LEN],
    pub owner_key_id: Vec<u8>,
}

impl EncryptedTransaction {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.ciphertext.len() + NONCE_LEN + 8 + self.owner_key_id.len());
        put_bytes(&mut out, &self.ciphertext);
        out.extend_from_slice(&self.nonce);
        put_bytes(&mut out, &self.owner_key_id);
        out
    }

    pub fn decode_from(r: &mut Reader<'_>) -> Result<Self> {
        let ciphertext = r.bytes()?.to_vec();
        let nonce = r.array::<NONCE_LEN>()?;
        let owner_key_id = r.bytes()?.to_vec();
        Ok(Self {
            ciphertext,
            nonce,
            owner_key_id,
        })
    }

    fn as_sealed(&self) -> Sealed {
        Sealed {
            ciphertext: self.ciphertext.clone(),
            nonce: self.nonce,
            key_id: self.owner_key_id.clone(),
        }
    }
}

impl From<Sealed> for EncryptedTransaction {
    fn from(s: Sealed) -> Self {
        Self {
            ciphertext: s.ciphertext,
            nonce: s.nonce,
            owner_key_id: s.key_id,
        }
    }
}

pub fn encrypt_tx<R: RngCore + ?Sized>(tx: &Transaction, owner: &SealKey, rng: &mut R) -> EncryptedTransaction {
    owner.seal(&tx.encode(), rng).into()
}

pub fn encrypt_tx_with_nonce(tx: &Transaction, owner: &SealKey, nonce: [u8; NONCE_LEN]) -> EncryptedTransaction {
    owner.seal_with_nonce(&tx.encode(), nonce).into()
}

pub fn decrypt_tx(etx: &EncryptedTransaction, owner: &SealKey) -> Result<Transaction> {
    Transaction::decode(&owner.open(&etx.as_sealed())?)
}
