//! Prime-field arithmetic, vectors and dense matrices over `F_q`.
//!
//! The modulus is a const generic, so a field type such as [`Fp<31>`] is the
//! shared parameter context for every element of that field. Elements are
//! stored as canonical representatives in `[0, q)`, which keeps equality and
//! serialization trivial. Every `q` used here fits in one byte.

use std::fmt;
use std::hash::Hash;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use num_traits::{One, Zero};
use rand::Rng;

use crate::error::{Error, Result};

/// Attempts allowed when sampling an invertible matrix.
pub const INVERTIBLE_SAMPLE_CAP: usize = 1000;

const fn is_prime(q: u8) -> bool {
    if q < 2 {
        return false;
    }
    let mut d = 2u8;
    while (d as u16) * (d as u16) <= q as u16 {
        if q.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// A prime field whose elements are canonical residues stored in one byte.
pub trait PrimeField:
    Copy
    + Eq
    + Hash
    + Default
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
{
    const MODULUS: u32;

    /// Reduces an arbitrary integer into the field.
    fn from_u64(v: u64) -> Self;

    /// Canonical representative in `[0, q)`.
    fn value(self) -> u32;

    /// Multiplicative inverse; fails on zero.
    fn inv(self) -> Result<Self>;

    /// Uniformly random element.
    fn random<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Parses a canonical byte; values `>= q` are rejected.
    fn from_canonical_byte(b: u8) -> Option<Self> {
        if (b as u32) < Self::MODULUS {
            Some(Self::from_u64(b as u64))
        } else {
            None
        }
    }

    fn to_byte(self) -> u8 {
        self.value() as u8
    }
}

/// Element of the prime field `F_Q`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Fp<const Q: u8>(u8);

impl<const Q: u8> Fp<Q> {
    const PRIME_CHECK: () = assert!(is_prime(Q), "field modulus must be prime");

    pub fn new(v: u64) -> Self {
        #[allow(clippy::let_unit_value)]
        let () = Self::PRIME_CHECK;
        Fp((v % Q as u64) as u8)
    }

    pub fn pow(self, mut exp: u32) -> Self {
        let mut base = self;
        let mut acc = Self::one();
        while exp > 0 {
            if exp & 1 == 1 {
                acc *= base;
            }
            base *= base;
            exp >>= 1;
        }
        acc
    }
}

impl<const Q: u8> fmt::Debug for Fp<Q> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl<const Q: u8> fmt::Display for Fp<Q> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl<const Q: u8> Add for Fp<Q> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        let s = self.0 as u16 + rhs.0 as u16;
        let q = Q as u16;
        Fp(if s >= q { s - q } else { s } as u8)
    }
}

impl<const Q: u8> Sub for Fp<Q> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        let q = Q as u16;
        Fp(((self.0 as u16 + q - rhs.0 as u16) % q) as u8)
    }
}

impl<const Q: u8> Mul for Fp<Q> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        Fp(((self.0 as u16 * rhs.0 as u16) % Q as u16) as u8)
    }
}

impl<const Q: u8> Neg for Fp<Q> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        if self.0 == 0 {
            self
        } else {
            Fp(Q - self.0)
        }
    }
}

impl<const Q: u8> AddAssign for Fp<Q> {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl<const Q: u8> SubAssign for Fp<Q> {
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl<const Q: u8> MulAssign for Fp<Q> {
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}

impl<const Q: u8> Zero for Fp<Q> {
    fn zero() -> Self {
        Fp(0)
    }
    fn is_zero(&self) -> bool {
        self.0 == 0
    }
}

impl<const Q: u8> One for Fp<Q> {
    fn one() -> Self {
        Self::new(1)
    }
}

impl<const Q: u8> PrimeField for Fp<Q> {
    const MODULUS: u32 = Q as u32;

    #[inline]
    fn from_u64(v: u64) -> Self {
        Self::new(v)
    }

    #[inline]
    fn value(self) -> u32 {
        self.0 as u32
    }

    fn inv(self) -> Result<Self> {
        if self.0 == 0 {
            return Err(Error::ZeroInverse);
        }
        // Fermat: a^(q-2) = a^-1
        Ok(self.pow(Q as u32 - 2))
    }

    fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::new(rng.gen_range(0..Q as u64))
    }
}

pub type FieldVector<F> = Vec<F>;

pub fn random_vector<F: PrimeField, R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<F> {
    (0..len).map(|_| F::random(rng)).collect()
}

pub fn vec_add<F: PrimeField>(a: &[F], b: &[F]) -> Vec<F> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

pub fn vec_sub<F: PrimeField>(a: &[F], b: &[F]) -> Vec<F> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn vec_scale<F: PrimeField>(alpha: F, a: &[F]) -> Vec<F> {
    a.iter().map(|&x| alpha * x).collect()
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

/// Dense row-major matrix over `F`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FieldMatrix<F> {
    rows: usize,
    cols: usize,
    entries: Vec<F>,
}

impl<F: PrimeField> FieldMatrix<F> {
    pub fn zero(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![F::zero(); rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zero(dim, dim);
        for i in 0..dim {
            m.set(i, i, F::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<F>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut entries = Vec::with_capacity(r * c);
        for row in rows {
            check_len(c, row.len())?;
            entries.extend(row);
        }
        Ok(Self {
            rows: r,
            cols: c,
            entries,
        })
    }

    pub fn from_entries(rows: usize, cols: usize, entries: Vec<F>) -> Result<Self> {
        check_len(rows * cols, entries.len())?;
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    pub fn random<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        Self {
            rows,
            cols,
            entries: random_vector(rows * cols, rng),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[F] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> F {
        self.entries[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: F) {
        self.entries[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[F] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    pub fn mul_vec(&self, x: &[F]) -> Result<Vec<F>> {
        check_len(self.cols, x.len())?;
        Ok((0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(x)
                    .fold(F::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        check_len(self.cols, other.rows)?;
        let mut out = Self::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zero(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    /// Rank by Gaussian elimination on a copy.
    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        let mut rank = 0;
        for col in 0..m.cols {
            let Some(p) = (rank..m.rows).find(|&r| !m.get(r, col).is_zero()) else {
                continue;
            };
            m.swap_rows(p, rank);
            let inv = m.get(rank, col).inv().expect("pivot is nonzero");
            for r in rank + 1..m.rows {
                let f = m.get(r, col) * inv;
                if f.is_zero() {
                    continue;
                }
                for c in col..m.cols {
                    let v = m.get(r, c) - f * m.get(rank, c);
                    m.set(r, c, v);
                }
            }
            rank += 1;
        }
        rank
    }

    pub fn is_invertible(&self) -> bool {
        self.rows == self.cols && self.rank() == self.rows
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.entries.swap(a * self.cols + c, b * self.cols + c);
        }
    }
}

/// Solves `A x = b` by Gauss-Jordan elimination.
///
/// Pivots are the first nonzero entry in each column, scanning rows top to
/// bottom, so the result is deterministic. `Ok(None)` means `A` is singular;
/// mismatched shapes are an error.
pub fn solve_linear<F: PrimeField>(a: &FieldMatrix<F>, b: &[F]) -> Result<Option<Vec<F>>> {
    check_len(a.rows, a.cols)?;
    check_len(a.rows, b.len())?;
    let n = a.rows;
    let mut m = a.clone();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let Some(p) = (col..n).find(|&r| !m.get(r, col).is_zero()) else {
            return Ok(None);
        };
        m.swap_rows(p, col);
        rhs.swap(p, col);
        let inv = m.get(col, col).inv()?;
        for c in col..n {
            let v = m.get(col, c) * inv;
            m.set(col, c, v);
        }
        rhs[col] *= inv;
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = m.get(r, col);
            if f.is_zero() {
                continue;
            }
            for c in col..n {
                let v = m.get(r, c) - f * m.get(col, c);
                m.set(r, c, v);
            }
            let v = rhs[col];
            rhs[r] -= f * v;
        }
    }
    Ok(Some(rhs))
}

/// Samples uniform square matrices until one is invertible.
pub fn random_invertible_matrix<F: PrimeField, R: Rng + ?Sized>(
    dim: usize,
    rng: &mut R,
) -> Result<FieldMatrix<F>> {
    if dim == 0 {
        return Err(Error::InvalidParams("matrix dimension must be >= 1".into()));
    }
    for _ in 0..INVERTIBLE_SAMPLE_CAP {
        let m = FieldMatrix::random(dim, dim, rng);
        if m.is_invertible() {
            return Ok(m);
        }
    }
    Err(Error::NoInvertibleMatrix(INVERTIBLE_SAMPLE_CAP))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    type F = Fp<31>;

    fn f(v: u64) -> F {
        F::new(v)
    }

    #[test]
    fn inverse_of_one_and_two() {
        assert_eq!(f(1).inv().unwrap(), f(1));
        // brute-force scan of all candidates
        let brute = (0..31).map(f).find(|&c| f(2) * c == f(1)).unwrap();
        assert_eq!(brute, f(16));
        assert_eq!(f(2).inv().unwrap(), f(16));
    }

    #[test]
    fn add_wraps() {
        assert_eq!(f(30) + f(1), f(0));
        assert_eq!(f(0) - f(1), f(30));
        assert_eq!(-f(0), f(0));
        assert_eq!(-f(5), f(26));
    }

    #[test]
    fn zero_has_no_inverse() {
        assert_eq!(f(0).inv(), Err(Error::ZeroInverse));
    }

    #[test]
    fn inverse_matches_brute_force_for_every_element() {
        for a in 1..31 {
            let brute = (1..31).map(f).find(|&c| f(a) * c == F::one()).unwrap();
            assert_eq!(f(a).inv().unwrap(), brute);
        }
    }

    #[test]
    fn canonical_byte_parsing() {
        assert_eq!(F::from_canonical_byte(30), Some(f(30)));
        assert_eq!(F::from_canonical_byte(31), None);
        assert_eq!(F::from_canonical_byte(255), None);
    }

    #[test]
    fn solve_identity_system() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let v: Vec<F> = random_vector(5, &mut rng);
        let x = solve_linear(&FieldMatrix::identity(5), &v).unwrap().unwrap();
        assert_eq!(x, v);
    }

    #[test]
    fn solve_diagonal_two() {
        let a = FieldMatrix::from_rows(vec![vec![f(2), f(0)], vec![f(0), f(2)]]).unwrap();
        let x = solve_linear(&a, &[f(1), f(1)]).unwrap().unwrap();
        assert_eq!(x, vec![f(16), f(16)]);
    }

    #[test]
    fn solve_zero_matrix_is_singular() {
        let a = FieldMatrix::<F>::zero(3, 3);
        assert_eq!(solve_linear(&a, &[f(1), f(0), f(2)]).unwrap(), None);
    }

    #[test]
    fn solve_dimension_mismatch() {
        let a = FieldMatrix::<F>::identity(3);
        assert!(matches!(
            solve_linear(&a, &[f(1)]),
            Err(Error::DimensionMismatch { .. })
        ));
        let rect = FieldMatrix::<F>::zero(2, 3);
        assert!(solve_linear(&rect, &[f(1), f(1)]).is_err());
    }

    #[test]
    fn invertible_1x1_is_nonzero() {
        for seed in 0..20 {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let m: FieldMatrix<F> = random_invertible_matrix(1, &mut rng).unwrap();
            assert!(!m.get(0, 0).is_zero());
        }
    }

    #[test]
    fn invertible_matrix_is_deterministic() {
        let a: FieldMatrix<F> =
            random_invertible_matrix(3, &mut ChaCha20Rng::seed_from_u64(7)).unwrap();
        let b: FieldMatrix<F> =
            random_invertible_matrix(3, &mut ChaCha20Rng::seed_from_u64(7)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invertible_matrix_solves_every_unit_vector() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let m: FieldMatrix<F> = random_invertible_matrix(6, &mut rng).unwrap();
        for i in 0..6 {
            let mut e = vec![F::zero(); 6];
            e[i] = F::one();
            let x = solve_linear(&m, &e).unwrap().expect("invertible");
            assert_eq!(m.mul_vec(&x).unwrap(), e);
        }
    }

    #[test]
    fn zero_dimension_rejected() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        assert!(random_invertible_matrix::<F, _>(0, &mut rng).is_err());
    }

    #[test]
    fn rank_of_duplicate_rows() {
        let a = FieldMatrix::from_rows(vec![vec![f(1), f(2)], vec![f(2), f(4)]]).unwrap();
        assert_eq!(a.rank(), 1);
        assert!(!a.is_invertible());
    }

    #[test]
    fn other_prime_moduli_work() {
        let a = Fp::<2>::new(1);
        assert_eq!(a + a, Fp::<2>::new(0));
        assert_eq!(Fp::<251>::new(250).inv().unwrap(), Fp::<251>::new(250));
    }
}
