//! Identity-based signatures from a UOV trapdoor and the Fiat–Shamir
//! collapse of the 5-pass MQ identification protocol.
//!
//! The key generation center publishes `P = S ∘ F ∘ T` and keeps
//! `(S, F, T)`. A user's secret key is a preimage `u` of the public target
//! `Hash(ID)`; a signature proves knowledge of `u` over `Ψ` parallel rounds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::codec::{put_bytes, put_raw_elements, put_u32, put_vector, Reader};
use crate::error::{Error, Result};
use crate::gf::{check_len, random_vector, vec_scale, vec_sub, PrimeField};
use crate::hash::{commit0, commit1, hash1, hash2, hash3, hash_identity, sha3_256, Digest};
use crate::mqmap::{compose_public, invert_public, AffineMap, QuadraticMap, UovCentralMap};
use crate::params::ParamSet;
use crate::verdict::{RejectReason, Verdict};

/// Derivation counters tried by [`extract`] before giving up.
pub const EXTRACT_COUNTER_CAP: u32 = 16;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MasterPublicKey<F> {
    params: ParamSet,
    map: QuadraticMap<F>,
    encoded_map: Vec<u8>,
}

impl<F: PrimeField> MasterPublicKey<F> {
    pub fn new(params: ParamSet, map: QuadraticMap<F>) -> Result<Self> {
        check_len(params.n(), map.num_vars())?;
        check_len(params.m(), map.num_polys())?;
        let encoded_map = map.encode();
        Ok(Self {
            params,
            map,
            encoded_map,
        })
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn map(&self) -> &QuadraticMap<F> {
        &self.map
    }

    /// Canonical serialization of `P`, the prefix of every `Hash₁` input.
    pub fn map_bytes(&self) -> &[u8] {
        &self.encoded_map
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(20 + self.encoded_map.len());
        self.params.encode_header(&mut out);
        out.extend_from_slice(&self.encoded_map);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        let params = ParamSet::decode_header(&mut r)?;
        let map = QuadraticMap::decode_from(&mut r)?;
        r.finish()?;
        Self::new(params, map).map_err(|e| Error::Malformed(e.to_string()))
    }
}

/// The trapdoor `(S, F, T)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MasterSecretKey<F> {
    params: ParamSet,
    s: AffineMap<F>,
    f: UovCentralMap<F>,
    t: AffineMap<F>,
    digest: Digest,
}

impl<F: PrimeField> MasterSecretKey<F> {
    pub fn new(params: ParamSet, s: AffineMap<F>, f: UovCentralMap<F>, t: AffineMap<F>) -> Result<Self> {
        check_len(params.oil, f.oil())?;
        check_len(params.vinegar, f.vinegar())?;
        check_len(params.m(), s.dim())?;
        check_len(params.n(), t.dim())?;
        let mut msk = Self {
            params,
            s,
            f,
            t,
            digest: [0; 32],
        };
        msk.digest = sha3_256(&[&msk.encode()]);
        Ok(msk)
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn outer(&self) -> &AffineMap<F> {
        &self.s
    }

    pub fn central(&self) -> &UovCentralMap<F> {
        &self.f
    }

    pub fn inner(&self) -> &AffineMap<F> {
        &self.t
    }

    /// Recomputes `P = S ∘ F ∘ T`.
    pub fn public_key(&self) -> Result<MasterPublicKey<F>> {
        MasterPublicKey::new(self.params.clone(), compose_public(&self.s, &self.f, &self.t)?)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.params.encode_header(&mut out);
        self.s.encode_into(&mut out);
        self.f.as_map().encode_into(&mut out);
        self.t.encode_into(&mut out);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        let params = ParamSet::decode_header(&mut r)?;
        let s = AffineMap::decode_from(&mut r)?;
        let central = QuadraticMap::<F>::decode_from(&mut r)?;
        let t = AffineMap::decode_from(&mut r)?;
        r.finish()?;
        let f = UovCentralMap::new(params.oil, params.vinegar, central.polys().to_vec())
            .map_err(|e| Error::Malformed(e.to_string()))?;
        Self::new(params, s, f, t).map_err(|e| Error::Malformed(e.to_string()))
    }
}

/// `U_ID`, a preimage of `Hash(ID)` under `P`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UserSecretKey<F> {
    pub id: Vec<u8>,
    pub u: Vec<F>,
}

impl<F: PrimeField> UserSecretKey<F> {
    pub fn encode(&self, params: &ParamSet) -> Vec<u8> {
        let mut out = Vec::new();
        params.encode_header(&mut out);
        put_bytes(&mut out, &self.id);
        put_vector(&mut out, &self.u);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<(ParamSet, Self)> {
        let mut r = Reader::new(bytes);
        let params = ParamSet::decode_header(&mut r)?;
        let id = r.bytes()?.to_vec();
        let u = r.vector()?;
        r.finish()?;
        if u.len() != params.n() {
            return Err(Error::Malformed("secret key length does not match profile".into()));
        }
        Ok((params, Self { id, u }))
    }
}

/// Round `j`'s first response `(g₁ʲ, h₁ʲ)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FirstResponse<F> {
    pub g1: Vec<F>,
    pub h1: Vec<F>,
}

/// `(Comm, Res₁, Res₂)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IbsSignature<F> {
    /// `(β₀ʲ, β₁ʲ)` for `j = 1..Ψ`.
    pub comm: Vec<(Digest, Digest)>,
    pub res1: Vec<FirstResponse<F>>,
    /// `f_{V_j}ʲ` for `j = 1..Ψ`.
    pub res2: Vec<Vec<F>>,
}

impl<F: PrimeField> IbsSignature<F> {
    pub fn rounds(&self) -> usize {
        self.comm.len()
    }

    pub fn commitment_count(&self) -> usize {
        2 * self.comm.len()
    }

    pub fn field_element_count(&self) -> usize {
        self.res1.iter().map(|r| r.g1.len() + r.h1.len()).sum::<usize>()
            + self.res2.iter().map(Vec::len).sum::<usize>()
    }

    /// Header, then all `(β₀, β₁)` pairs, then `Res₁` pairs, then `Res₂`.
    /// Element payloads are raw bytes; their sizes follow from the header.
    pub fn encode(&self, params: &ParamSet) -> Vec<u8> {
        let mut out = Vec::with_capacity(
            20 + self.commitment_count() * 32 + self.field_element_count(),
        );
        params.encode_header(&mut out);
        for (b0, b1) in &self.comm {
            out.extend_from_slice(b0);
            out.extend_from_slice(b1);
        }
        for r in &self.res1 {
            put_raw_elements(&mut out, &r.g1);
            put_raw_elements(&mut out, &r.h1);
        }
        for f in &self.res2 {
            put_raw_elements(&mut out, f);
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<(ParamSet, Self)> {
        let mut r = Reader::new(bytes);
        let params = ParamSet::decode_header(&mut r)?;
        let sig = Self::decode_body(&mut r, &params)?;
        r.finish()?;
        Ok((params, sig))
    }

    fn decode_body(r: &mut Reader<'_>, params: &ParamSet) -> Result<Self> {
        if params.q != F::MODULUS {
            return Err(Error::ModulusMismatch {
                expected: F::MODULUS,
                found: params.q,
            });
        }
        let (psi, n, m) = (params.psi, params.n(), params.m());
        let expected = psi * 64 + params.signature_elements();
        if r.remaining() < expected {
            return Err(Error::Malformed(format!(
                "signature body needs {expected} bytes, have {}",
                r.remaining()
            )));
        }
        let comm = (0..psi)
            .map(|_| Ok((r.array()?, r.array()?)))
            .collect::<Result<_>>()?;
        let res1 = (0..psi)
            .map(|_| {
                Ok(FirstResponse {
                    g1: r.raw_elements(n)?,
                    h1: r.raw_elements(m)?,
                })
            })
            .collect::<Result<_>>()?;
        let res2 = (0..psi).map(|_| r.raw_elements(n)).collect::<Result<_>>()?;
        Ok(Self { comm, res1, res2 })
    }

    fn comm_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.comm.len() * 64);
        for (b0, b1) in &self.comm {
            out.extend_from_slice(b0);
            out.extend_from_slice(b1);
        }
        out
    }

    fn res1_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for r in &self.res1 {
            put_raw_elements(&mut out, &r.g1);
            put_raw_elements(&mut out, &r.h1);
        }
        out
    }
}

/// Samples `(S, F, T)` and publishes the expanded `P`.
pub fn setup<F: PrimeField, R: Rng + ?Sized>(
    params: &ParamSet,
    rng: &mut R,
) -> Result<(MasterPublicKey<F>, MasterSecretKey<F>)> {
    params.validate::<F>()?;
    let s = AffineMap::random(params.m(), rng)?;
    let t = AffineMap::random(params.n(), rng)?;
    let f = UovCentralMap::random(params.oil, params.vinegar, rng);
    let msk = MasterSecretKey::new(params.clone(), s, f, t)?;
    let mpk = msk.public_key()?;
    Ok((mpk, msk))
}

/// `k_ID = Hash(ID)`.
pub fn identity_target<F: PrimeField>(params: &ParamSet, id: &[u8]) -> Vec<F> {
    hash_identity(id, params.m())
}

/// Computes `U_ID = P⁻¹(Hash(ID))` using the trapdoor.
///
/// Vinegar randomness is seeded from `(Msk digest ‖ ID ‖ counter)`, so the
/// same master key and identity always yield the same secret key.
pub fn extract<F: PrimeField>(msk: &MasterSecretKey<F>, id: &[u8]) -> Result<UserSecretKey<F>> {
    let target = identity_target::<F>(&msk.params, id);
    let mut id_lp = Vec::with_capacity(id.len() + 4);
    put_bytes(&mut id_lp, id);
    for counter in 0..EXTRACT_COUNTER_CAP {
        let seed = sha3_256(&[b"pqmiss/extract", &msk.digest, &id_lp, &counter.to_le_bytes()]);
        let mut rng = ChaCha20Rng::from_seed(seed);
        match invert_public(&msk.s, &msk.f, &msk.t, &target, &mut rng) {
            Ok(u) => {
                return Ok(UserSecretKey { id: id.to_vec(), u });
            }
            Err(Error::InversionFailure(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::ExtractionFailure(EXTRACT_COUNTER_CAP))
}

/// Signs `msg` with `usk`.
pub fn sign<F: PrimeField, R: Rng + ?Sized>(
    mpk: &MasterPublicKey<F>,
    usk: &UserSecretKey<F>,
    msg: &[u8],
    rng: &mut R,
) -> Result<IbsSignature<F>> {
    let params = &mpk.params;
    let (n, m, psi) = (params.n(), params.m(), params.psi);
    check_len(n, usk.u.len())?;
    let p = &mpk.map;

    // 1
    let a = hash1(&[&mpk.encoded_map, msg]);

    // 2
    let mut f0s = Vec::with_capacity(psi);
    let mut g0s = Vec::with_capacity(psi);
    let mut h0s = Vec::with_capacity(psi);
    let mut f1s = Vec::with_capacity(psi);
    let mut comm = Vec::with_capacity(psi);
    for _ in 0..psi {
        let f0: Vec<F> = random_vector(n, rng);
        let g0: Vec<F> = random_vector(n, rng);
        let h0: Vec<F> = random_vector(m, rng);
        let f1 = vec_sub(&usk.u, &f0);
        let beta0 = commit0(&f0, &g0, &h0);
        let polar = p.polar_form(&g0, &f1)?;
        let w: Vec<F> = polar.iter().zip(&h0).map(|(&x, &y)| x + y).collect();
        let beta1 = commit1(&f1, &w);
        comm.push((beta0, beta1));
        f0s.push(f0);
        g0s.push(g0);
        h0s.push(h0);
        f1s.push(f1);
    }

    // 3-4
    let mut sig = IbsSignature {
        comm,
        res1: Vec::with_capacity(psi),
        res2: Vec::with_capacity(psi),
    };
    let comm_bytes = sig.comm_bytes();
    let delta: Vec<F> = hash2(&[&a, &comm_bytes], psi);

    // 5-6
    for j in 0..psi {
        let g1 = vec_sub(&vec_scale(delta[j], &f0s[j]), &g0s[j]);
        let pf0 = p.evaluate(&f0s[j])?;
        let h1 = vec_sub(&vec_scale(delta[j], &pf0), &h0s[j]);
        sig.res1.push(FirstResponse { g1, h1 });
    }

    // 7-8
    let res1_bytes = sig.res1_bytes();
    let bits = hash3(&[&a, &comm_bytes, &res1_bytes], psi);
    for (j, &bit) in bits.iter().enumerate() {
        let opened = if bit { &f1s[j] } else { &f0s[j] };
        sig.res2.push(opened.clone());
    }

    // 9
    Ok(sig)
}

/// Verifies `sig` on `msg` for identity `id`. Total: malformed input rejects.
pub fn verify<F: PrimeField>(
    mpk: &MasterPublicKey<F>,
    id: &[u8],
    msg: &[u8],
    sig: &IbsSignature<F>,
) -> Verdict {
    let params = &mpk.params;
    let (n, m, psi) = (params.n(), params.m(), params.psi);
    if sig.comm.len() != psi || sig.res1.len() != psi || sig.res2.len() != psi {
        return Verdict::Reject(RejectReason::Malformed(format!(
            "expected {psi} rounds, got comm={} res1={} res2={}",
            sig.comm.len(),
            sig.res1.len(),
            sig.res2.len()
        )));
    }
    let shapes_ok = sig.res1.iter().all(|r| r.g1.len() == n && r.h1.len() == m)
        && sig.res2.iter().all(|f| f.len() == n);
    if !shapes_ok {
        return Verdict::Reject(RejectReason::Malformed("response vector length".into()));
    }
    let p = &mpk.map;

    // 1-2
    let s_id = identity_target::<F>(params, id);
    let a = hash1(&[&mpk.encoded_map, msg]);
    let comm_bytes = sig.comm_bytes();
    let delta: Vec<F> = hash2(&[&a, &comm_bytes], psi);
    let bits = hash3(&[&a, &comm_bytes, &sig.res1_bytes()], psi);
    let p0 = p.constants();

    // 4
    for j in 0..psi {
        let f = &sig.res2[j];
        let FirstResponse { g1, h1 } = &sig.res1[j];
        let d = delta[j];
        let pf = p.evaluate(f).expect("shape checked");
        let ok = if !bits[j] {
            let g0 = vec_sub(&vec_scale(d, f), g1);
            let h0 = vec_sub(&vec_scale(d, &pf), h1);
            sig.comm[j].0 == commit0(f, &g0, &h0)
        } else {
            let polar = p.polar_form(g1, f).expect("shape checked");
            let w: Vec<F> = (0..m)
                .map(|k| d * (s_id[k] - pf[k] + p0[k]) - polar[k] - h1[k])
                .collect();
            sig.comm[j].1 == commit1(f, &w)
        };
        if !ok {
            return Verdict::Reject(RejectReason::Commitment { round: j });
        }
    }
    Verdict::Accept
}

/// Decodes then verifies; decoding failures and profile mismatches reject
/// as malformed.
pub fn verify_encoded<F: PrimeField>(
    mpk: &MasterPublicKey<F>,
    id: &[u8],
    msg: &[u8],
    sig_bytes: &[u8],
) -> Verdict {
    match IbsSignature::<F>::decode(sig_bytes) {
        Ok((params, sig)) if params == mpk.params => verify(mpk, id, msg, &sig),
        Ok(_) => Verdict::Reject(RejectReason::Malformed("profile mismatch".into())),
        Err(e) => Verdict::Reject(RejectReason::Malformed(e.to_string())),
    }
}

pub(crate) fn put_signature<F: PrimeField>(out: &mut Vec<u8>, params: &ParamSet, sig: &IbsSignature<F>) {
    let bytes = sig.encode(params);
    put_u32(out, bytes.len() as u32);
    out.extend_from_slice(&bytes);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::Fp;
    use num_traits::Zero;

    type F = Fp<31>;

    fn desk() -> (MasterPublicKey<F>, MasterSecretKey<F>, ChaCha20Rng) {
        let mut rng = ChaCha20Rng::seed_from_u64(42);
        let (mpk, msk) = setup::<F, _>(&ParamSet::desk(), &mut rng).unwrap();
        (mpk, msk, rng)
    }

    #[test]
    fn setup_publishes_composition() {
        let (mpk, msk, mut rng) = desk();
        for _ in 0..100 {
            let x: Vec<F> = random_vector(12, &mut rng);
            let expected = msk
                .outer()
                .apply(&msk.central().evaluate(&msk.inner().apply(&x).unwrap()).unwrap())
                .unwrap();
            assert_eq!(mpk.map().evaluate(&x).unwrap(), expected);
        }
        assert_eq!(mpk.map().element_count(), 364);
    }

    #[test]
    fn different_seeds_different_keys() {
        let (a, _) = setup::<F, _>(&ParamSet::desk(), &mut ChaCha20Rng::seed_from_u64(1)).unwrap();
        let (b, _) = setup::<F, _>(&ParamSet::desk(), &mut ChaCha20Rng::seed_from_u64(2)).unwrap();
        assert_ne!(a.map(), b.map());
    }

    #[test]
    fn extract_hits_identity_target_and_is_deterministic() {
        let (mpk, msk, _) = desk();
        let usk = extract(&msk, b"uav-7").unwrap();
        assert_eq!(
            mpk.map().evaluate(&usk.u).unwrap(),
            identity_target::<F>(mpk.params(), b"uav-7")
        );
        assert_eq!(extract(&msk, b"uav-7").unwrap(), usk);
        assert_ne!(extract(&msk, b"uav-8").unwrap().u, usk.u);
    }

    #[test]
    fn sign_verify_round_trip() {
        let (mpk, msk, mut rng) = desk();
        let usk = extract(&msk, b"alice").unwrap();
        let sig = sign(&mpk, &usk, b"hello", &mut rng).unwrap();
        assert_eq!(verify(&mpk, b"alice", b"hello", &sig), Verdict::Accept);
        assert!(!verify(&mpk, b"bob", b"hello", &sig).is_accept());
        assert!(!verify(&mpk, b"alice", b"hellO", &sig).is_accept());
    }

    #[test]
    fn signature_size_law() {
        let (mpk, msk, mut rng) = desk();
        let usk = extract(&msk, b"alice").unwrap();
        let sig = sign(&mpk, &usk, b"m", &mut rng).unwrap();
        assert_eq!(sig.field_element_count(), 280);
        assert_eq!(sig.commitment_count(), 20);
        let bytes = sig.encode(mpk.params());
        assert_eq!(bytes.len(), 20 + 20 * 32 + 280);
        let (params, back) = IbsSignature::<F>::decode(&bytes).unwrap();
        assert_eq!(&params, mpk.params());
        assert_eq!(back, sig);
    }

    #[test]
    fn randomized_signatures_differ() {
        let (mpk, msk, mut rng) = desk();
        let usk = extract(&msk, b"alice").unwrap();
        let a = sign(&mpk, &usk, b"m", &mut rng).unwrap();
        let b = sign(&mpk, &usk, b"m", &mut rng).unwrap();
        assert_ne!(a.comm, b.comm);
    }

    #[test]
    fn malformed_shapes_reject() {
        let (mpk, msk, mut rng) = desk();
        let usk = extract(&msk, b"alice").unwrap();
        let sig = sign(&mpk, &usk, b"m", &mut rng).unwrap();

        let mut short = sig.clone();
        short.res2.pop();
        assert!(matches!(
            verify(&mpk, b"alice", b"m", &short),
            Verdict::Reject(RejectReason::Malformed(_))
        ));
        let mut bad = sig.clone();
        bad.res1[0].h1.push(F::zero());
        assert!(matches!(
            verify(&mpk, b"alice", b"m", &bad),
            Verdict::Reject(RejectReason::Malformed(_))
        ));

        let bytes = sig.encode(mpk.params());
        assert!(matches!(
            verify_encoded(&mpk, b"alice", b"m", &bytes[..bytes.len() - 1]),
            Verdict::Reject(RejectReason::Malformed(_))
        ));
        assert!(verify_encoded(&mpk, b"alice", b"m", &bytes).is_accept());
    }

    #[test]
    fn key_files_round_trip() {
        let (mpk, msk, _) = desk();
        assert_eq!(MasterPublicKey::<F>::decode(&mpk.encode()).unwrap(), mpk);
        let back = MasterSecretKey::<F>::decode(&msk.encode()).unwrap();
        assert_eq!(back, msk);
        let usk = extract(&msk, b"carol").unwrap();
        let (p, u) = UserSecretKey::<F>::decode(&usk.encode(mpk.params())).unwrap();
        assert_eq!(&p, mpk.params());
        assert_eq!(u, usk);
        // element count of the public key file payload
        assert_eq!(mpk.encode().len(), 20 + 12 + 364);
    }
}
