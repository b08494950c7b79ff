//! Parameter profiles and the round-count law.

use num_bigint::BigUint;

use crate::codec::{put_u32, Reader};
use crate::error::{Error, Result};
use crate::gf::PrimeField;
use crate::hash::DIGEST_LEN;

/// Magic prefix of key and signature files.
pub const MAGIC: &[u8; 4] = b"PQM1";

/// Smallest `Ψ` with `Ψ · log₂(2q / (q + 1)) >= ζ`, i.e.
/// `⌈ζ / −log₂(1/2 + 1/(2q))⌉`.
///
/// The ceiling is decided exactly by comparing `(2q)^Ψ` with
/// `2^ζ (q + 1)^Ψ` in big integers; the float estimate only picks the
/// starting point.
pub fn rounds_for_security(zeta: u32, q: u32) -> usize {
    assert!(zeta >= 1 && q >= 2, "rounds_for_security needs zeta >= 1 and q >= 2");
    let per_round = (2.0 * q as f64 / (q as f64 + 1.0)).log2();
    let estimate = (zeta as f64 / per_round).ceil().max(1.0) as usize;

    let reaches = |r: usize| {
        let lhs = BigUint::from(2 * q).pow(r as u32);
        let rhs = (BigUint::from(1u8) << zeta as usize) * BigUint::from(q + 1).pow(r as u32);
        lhs >= rhs
    };
    let mut r = estimate;
    while r > 1 && reaches(r - 1) {
        r -= 1;
    }
    while !reaches(r) {
        r += 1;
    }
    r
}

/// Per-round soundness error `1/2 + 1/(2q)`.
pub fn soundness_error(q: u32) -> f64 {
    0.5 + 0.5 / q as f64
}

/// Security bits actually delivered by `psi` rounds: `⌊Ψ · −log₂(SE)⌋`.
pub fn security_bits(psi: usize, q: u32) -> u32 {
    (psi as f64 * -soundness_error(q).log2()).floor() as u32
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ParamSet {
    pub q: u32,
    /// `o = m`, the number of public polynomials.
    pub oil: usize,
    pub vinegar: usize,
    /// Target security bits ζ.
    pub zeta: u32,
    /// Round count Ψ.
    pub psi: usize,
    pub commit_len: usize,
    /// Toy-sized profile for tests; allowed to run fewer rounds than ζ demands.
    pub desk: bool,
}

impl ParamSet {
    /// `q = 31, o = 4, v = 8, Ψ = 10` (ζ = 9). Toy dimensions, fast.
    pub fn desk() -> Self {
        Self {
            q: 31,
            oil: 4,
            vinegar: 8,
            zeta: 9,
            psi: 10,
            commit_len: DIGEST_LEN,
            desk: true,
        }
    }

    /// `q = 31, o = 44, v = 88`, ζ = 128 so Ψ = 135.
    pub fn paper128() -> Self {
        Self::from_security(31, 44, 88, 128)
    }

    pub fn from_security(q: u32, oil: usize, vinegar: usize, zeta: u32) -> Self {
        Self {
            q,
            oil,
            vinegar,
            zeta,
            psi: rounds_for_security(zeta, q),
            commit_len: DIGEST_LEN,
            desk: false,
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "desk" => Some(Self::desk()),
            "paper128" => Some(Self::paper128()),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        if *self == Self::desk() {
            "desk"
        } else if *self == Self::paper128() {
            "paper128"
        } else {
            "custom"
        }
    }

    /// Number of public polynomials.
    pub fn m(&self) -> usize {
        self.oil
    }

    /// Number of variables.
    pub fn n(&self) -> usize {
        self.oil + self.vinegar
    }

    pub fn validate<F: PrimeField>(&self) -> Result<()> {
        if self.q != F::MODULUS {
            return Err(Error::ModulusMismatch {
                expected: F::MODULUS,
                found: self.q,
            });
        }
        if self.oil == 0 || self.vinegar == 0 || self.psi == 0 || self.zeta == 0 {
            return Err(Error::InvalidParams("o, v, Ψ and ζ must all be >= 1".into()));
        }
        if self.commit_len != DIGEST_LEN {
            return Err(Error::InvalidParams(format!(
                "commitment length must be {DIGEST_LEN}"
            )));
        }
        let required = rounds_for_security(self.zeta, self.q);
        let ok = if self.desk {
            self.psi <= required
        } else {
            self.psi == required
        };
        if !ok {
            return Err(Error::InvalidParams(format!(
                "Ψ = {} but ζ = {} over F_{} needs {required} rounds",
                self.psi, self.zeta, self.q
            )));
        }
        Ok(())
    }

    /// `(q, o, v, Ψ)` as u32 LE.
    pub fn encode_header(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(MAGIC);
        put_u32(out, self.q);
        put_u32(out, self.oil as u32);
        put_u32(out, self.vinegar as u32);
        put_u32(out, self.psi as u32);
    }

    /// Reads magic and header. Known profiles are recognised; anything else
    /// becomes a custom profile whose ζ is the security its Ψ delivers.
    pub fn decode_header(r: &mut Reader<'_>) -> Result<Self> {
        if r.take(4)? != MAGIC {
            return Err(Error::Malformed("bad magic, expected PQM1".into()));
        }
        let q = r.u32()?;
        let oil = r.u32()? as usize;
        let vinegar = r.u32()? as usize;
        let psi = r.u32()? as usize;
        if !(2..=255).contains(&q) || oil == 0 || vinegar == 0 || psi == 0 {
            return Err(Error::Malformed("invalid profile header".into()));
        }
        if oil > 1024 || vinegar > 2048 || psi > 4096 {
            return Err(Error::Malformed("implausible profile header".into()));
        }
        for known in [Self::desk(), Self::paper128()] {
            if (known.q, known.oil, known.vinegar, known.psi) == (q, oil, vinegar, psi) {
                return Ok(known);
            }
        }
        Ok(Self {
            q,
            oil,
            vinegar,
            zeta: security_bits(psi, q).max(1),
            psi,
            commit_len: DIGEST_LEN,
            desk: false,
        })
    }

    /// Serialized public-key coefficients: `m (n + 2)(n + 1) / 2`.
    pub fn public_key_elements(&self) -> usize {
        self.m() * (self.n() + 2) * (self.n() + 1) / 2
    }

    /// Field elements in a signature: `Ψ (m + 2n)`.
    pub fn signature_elements(&self) -> usize {
        self.psi * (self.m() + 2 * self.n())
    }

    /// Commitments in a signature: `2Ψ`.
    pub fn signature_commitments(&self) -> usize {
        2 * self.psi
    }
}
