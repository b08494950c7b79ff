//! Little-endian byte encoding shared by every on-disk and on-wire format.
//!
//! Field vectors are a 4-byte little-endian length followed by one byte per
//! element. Opaque byte strings use the same length prefix.

use crate::error::{Error, Result};
use crate::gf::PrimeField;

pub fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

pub fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

pub fn put_bytes(out: &mut Vec<u8>, bytes: &[u8]) {
    put_u32(out, bytes.len() as u32);
    out.extend_from_slice(bytes);
}

/// Elements only, no length prefix.
pub fn put_raw_elements<F: PrimeField>(out: &mut Vec<u8>, v: &[F]) {
    out.extend(v.iter().map(|x| x.to_byte()));
}

pub fn put_vector<F: PrimeField>(out: &mut Vec<u8>, v: &[F]) {
    put_u32(out, v.len() as u32);
    put_raw_elements(out, v);
}

pub fn encode_vector<F: PrimeField>(v: &[F]) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + v.len());
    put_vector(&mut out, v);
    out
}

pub fn decode_vector<F: PrimeField>(bytes: &[u8]) -> Result<Vec<F>> {
    let mut r = Reader::new(bytes);
    let v = r.vector()?;
    r.finish()?;
    Ok(v)
}

/// Cursor over an input buffer; every read is bounds-checked.
pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(Error::Malformed(format!(
                "need {n} bytes at offset {}, have {}",
                self.pos,
                self.remaining()
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut a = [0u8; N];
        a.copy_from_slice(self.take(N)?);
        Ok(a)
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    pub fn bytes(&mut self) -> Result<&'a [u8]> {
        let n = self.u32()? as usize;
        self.take(n)
    }

    pub fn raw_elements<F: PrimeField>(&mut self, n: usize) -> Result<Vec<F>> {
        self.take(n)?
            .iter()
            .map(|&b| {
                F::from_canonical_byte(b).ok_or_else(|| {
                    Error::Malformed(format!("byte {b} is not a canonical F_{} element", F::MODULUS))
                })
            })
            .collect()
    }

    pub fn vector<F: PrimeField>(&mut self) -> Result<Vec<F>> {
        let n = self.u32()? as usize;
        self.raw_elements(n)
    }

    pub fn rest(&mut self) -> &'a [u8] {
        let s = &self.buf[self.pos..];
        self.pos = self.buf.len();
        s
    }

    /// Fails if unread bytes remain.
    pub fn finish(&self) -> Result<()> {
        if self.remaining() == 0 {
            Ok(())
        } else {
            Err(Error::Malformed(format!("{} trailing bytes", self.remaining())))
        }
    }
}
