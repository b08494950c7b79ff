//! Authenticated symmetric envelopes.
//!
//! A [`SealKey`] stands in for "encrypt to the owner": whoever holds the key
//! reads the payload, every other key fails authentication. The key id is
//! bound as associated data.

use chacha20poly1305::aead::{Aead, KeyInit, Payload};
use chacha20poly1305::{XChaCha20Poly1305, XNonce};
use rand::RngCore;

use crate::error::{Error, Result};

pub const NONCE_LEN: usize = 24;
pub const KEY_LEN: usize = 32;

#[derive(Clone, PartialEq, Eq)]
pub struct SealKey {
    id: Vec<u8>,
    key: [u8; KEY_LEN],
}

impl std::fmt::Debug for SealKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SealKey")
            .field("id", &String::from_utf8_lossy(&self.id))
            .finish_non_exhaustive()
    }
}

/// Ciphertext with its nonce and the id of the key it was sealed under.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sealed {
    pub ciphertext: Vec<u8>,
    pub nonce: [u8; NONCE_LEN],
    pub key_id: Vec<u8>,
}

impl SealKey {
    pub fn new(id: impl Into<Vec<u8>>, key: [u8; KEY_LEN]) -> Self {
        Self { id: id.into(), key }
    }

    pub fn generate<R: RngCore + ?Sized>(id: impl Into<Vec<u8>>, rng: &mut R) -> Self {
        let mut key = [0u8; KEY_LEN];
        rng.fill_bytes(&mut key);
        Self::new(id, key)
    }

    pub fn id(&self) -> &[u8] {
        &self.id
    }

    fn cipher(&self) -> XChaCha20Poly1305 {
        XChaCha20Poly1305::new((&self.key).into())
    }

    pub fn seal<R: RngCore + ?Sized>(&self, plaintext: &[u8], rng: &mut R) -> Sealed {
        let mut nonce = [0u8; NONCE_LEN];
        rng.fill_bytes(&mut nonce);
        self.seal_with_nonce(plaintext, nonce)
    }

    pub fn seal_with_nonce(&self, plaintext: &[u8], nonce: [u8; NONCE_LEN]) -> Sealed {
        let ciphertext = self
            .cipher()
            .encrypt(
                XNonce::from_slice(&nonce),
                Payload {
                    msg: plaintext,
                    aad: &self.id,
                },
            )
            .expect("XChaCha20-Poly1305 encryption of an in-memory buffer cannot fail");
        Sealed {
            ciphertext,
            nonce,
            key_id: self.id.clone(),
        }
    }

    /// Fails with [`Error::Authentication`] for any other key or any tampering.
    pub fn open(&self, sealed: &Sealed) -> Result<Vec<u8>> {
        if sealed.key_id != self.id {
            return Err(Error::Authentication);
        }
        self.cipher()
            .decrypt(
                XNonce::from_slice(&sealed.nonce),
                Payload {
                    msg: &sealed.ciphertext,
                    aad: &self.id,
                },
            )
            .map_err(|_| Error::Authentication)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn round_trip_and_reseal() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let k = SealKey::generate("fog-0", &mut rng);
        let s = k.seal(b"payload", &mut rng);
        let pt = k.open(&s).unwrap();
        assert_eq!(pt, b"payload");
        assert_eq!(k.seal_with_nonce(&pt, s.nonce), s);
    }

    #[test]
    fn wrong_key_fails() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let a = SealKey::generate("a", &mut rng);
        let b = SealKey::generate("b", &mut rng);
        let s = a.seal(b"x", &mut rng);
        assert!(matches!(b.open(&s), Err(Error::Authentication)));
        // same id, different key material
        let a2 = SealKey::generate("a", &mut rng);
        assert!(matches!(a2.open(&s), Err(Error::Authentication)));
    }
}
