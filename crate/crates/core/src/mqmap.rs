//! Multivariate quadratic maps over `F_q`.
//!
//! A [`QuadraticMap`] is the public system `P`; [`AffineMap`] holds the secret
//! layers `S` and `T`; [`UovCentralMap`] is the oil-and-vinegar trapdoor `F`.
//! The public key is the explicit coefficient expansion of `S ∘ F ∘ T`.

use rand::Rng;

use crate::codec::{put_raw_elements, put_u32, Reader};
use crate::error::{Error, Result};
use crate::gf::{
    check_len, random_invertible_matrix, random_vector, solve_linear, vec_add, vec_sub,
    FieldMatrix, PrimeField,
};

/// Vinegar resamples allowed per central-map inversion.
pub const VINEGAR_RETRY_CAP: usize = 100;

/// Number of upper-triangular monomials `x_i x_j`, `i <= j`, in `n` variables.
pub const fn quad_terms(n: usize) -> usize {
    n * (n + 1) / 2
}

#[inline]
fn ut_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j && j < n);
    i * n - i * (i + 1) / 2 + j
}

/// One quadratic polynomial `Σ_{i<=j} q_ij x_i x_j + Σ l_i x_i + c`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct QuadraticPoly<F> {
    n: usize,
    quad: Vec<F>,
    lin: Vec<F>,
    constant: F,
}

impl<F: PrimeField> QuadraticPoly<F> {
    pub fn zero(n: usize) -> Self {
        Self {
            n,
            quad: vec![F::zero(); quad_terms(n)],
            lin: vec![F::zero(); n],
            constant: F::zero(),
        }
    }

    pub fn new(n: usize, quad: Vec<F>, lin: Vec<F>, constant: F) -> Result<Self> {
        check_len(quad_terms(n), quad.len())?;
        check_len(n, lin.len())?;
        Ok(Self {
            n,
            quad,
            lin,
            constant,
        })
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self {
            n,
            quad: random_vector(quad_terms(n), rng),
            lin: random_vector(n, rng),
            constant: F::random(rng),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    /// Coefficient of `x_i x_j`; order of `i`, `j` does not matter.
    pub fn quad(&self, i: usize, j: usize) -> F {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        self.quad[ut_index(self.n, a, b)]
    }

    pub fn set_quad(&mut self, i: usize, j: usize, v: F) {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        self.quad[ut_index(self.n, a, b)] = v;
    }

    pub fn quad_coeffs(&self) -> &[F] {
        &self.quad
    }

    pub fn lin(&self) -> &[F] {
        &self.lin
    }

    pub fn set_lin(&mut self, i: usize, v: F) {
        self.lin[i] = v;
    }

    pub fn constant(&self) -> F {
        self.constant
    }

    pub fn set_constant(&mut self, v: F) {
        self.constant = v;
    }

    /// Evaluates at `x` with one modular reduction per row of the quadratic
    /// part. Assumes `x.len() == n`.
    pub fn eval(&self, x: &[F]) -> F {
        let q = F::MODULUS as u64;
        let n = self.n;
        let mut acc = self.constant.value() as u64;
        let mut idx = 0;
        for i in 0..n {
            let xi = x[i].value() as u64;
            let row_len = n - i;
            if xi == 0 {
                idx += row_len;
                continue;
            }
            let row = &self.quad[idx..idx + row_len];
            let mut s = self.lin[i].value() as u64;
            for (c, xj) in row.iter().zip(&x[i..]) {
                s += c.value() as u64 * xj.value() as u64;
            }
            acc += xi * (s % q);
            idx += row_len;
        }
        F::from_u64(acc)
    }

    fn scaled_add(&mut self, alpha: F, other: &Self) {
        for (a, &b) in self.quad.iter_mut().zip(&other.quad) {
            *a += alpha * b;
        }
        for (a, &b) in self.lin.iter_mut().zip(&other.lin) {
            *a += alpha * b;
        }
        self.constant += alpha * other.constant;
    }
}

/// `m` quadratic polynomials in `n` variables.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct QuadraticMap<F> {
    n: usize,
    polys: Vec<QuadraticPoly<F>>,
}

impl<F: PrimeField> QuadraticMap<F> {
    pub fn new(n: usize, polys: Vec<QuadraticPoly<F>>) -> Result<Self> {
        for p in &polys {
            check_len(n, p.n)?;
        }
        Ok(Self { n, polys })
    }

    pub fn random<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Self {
        Self {
            n,
            polys: (0..m).map(|_| QuadraticPoly::random(n, rng)).collect(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn num_polys(&self) -> usize {
        self.polys.len()
    }

    pub fn polys(&self) -> &[QuadraticPoly<F>] {
        &self.polys
    }

    pub fn evaluate(&self, x: &[F]) -> Result<Vec<F>> {
        check_len(self.n, x.len())?;
        Ok(self.polys.iter().map(|p| p.eval(x)).collect())
    }

    /// `P(0)`, the vector of constant terms.
    pub fn constants(&self) -> Vec<F> {
        self.polys.iter().map(|p| p.constant).collect()
    }

    /// Polar form `G(x, y) = P(x + y) - P(x) - P(y) + P(0)`.
    pub fn polar_form(&self, x: &[F], y: &[F]) -> Result<Vec<F>> {
        check_len(self.n, x.len())?;
        check_len(self.n, y.len())?;
        let sum = vec_add(x, y);
        let pxy = self.evaluate(&sum)?;
        let px = self.evaluate(x)?;
        let py = self.evaluate(y)?;
        let p0 = self.evaluate(&vec![F::zero(); self.n])?;
        Ok((0..self.polys.len())
            .map(|k| pxy[k] - px[k] - py[k] + p0[k])
            .collect())
    }

    /// Field elements carried by the serialized coefficients:
    /// `m (n + 1)(n + 2) / 2`.
    pub fn element_count(&self) -> usize {
        self.polys.len() * (self.n + 1) * (self.n + 2) / 2
    }

    /// Header `(q, n, m)` as u32 LE, then per polynomial the upper-triangular
    /// quadratic coefficients, the linear coefficients and the constant.
    pub fn encode_into(&self, out: &mut Vec<u8>) {
        put_u32(out, F::MODULUS);
        put_u32(out, self.n as u32);
        put_u32(out, self.polys.len() as u32);
        for p in &self.polys {
            put_raw_elements(out, &p.quad);
            put_raw_elements(out, &p.lin);
            out.push(p.constant.to_byte());
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + self.element_count());
        self.encode_into(&mut out);
        out
    }

    pub fn decode_from(r: &mut Reader<'_>) -> Result<Self> {
        let q = r.u32()?;
        if q != F::MODULUS {
            return Err(Error::ModulusMismatch {
                expected: F::MODULUS,
                found: q,
            });
        }
        let n = r.u32()? as usize;
        let m = r.u32()? as usize;
        if n > 4096 || m > 4096 {
            return Err(Error::Malformed(format!("implausible map size n={n} m={m}")));
        }
        let mut polys = Vec::with_capacity(m);
        for _ in 0..m {
            let quad = r.raw_elements(quad_terms(n))?;
            let lin = r.raw_elements(n)?;
            let constant = r.raw_elements::<F>(1)?[0];
            polys.push(QuadraticPoly {
                n,
                quad,
                lin,
                constant,
            });
        }
        Ok(Self { n, polys })
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        let map = Self::decode_from(&mut r)?;
        r.finish()?;
        Ok(map)
    }
}

/// `x ↦ M x + c` with `M` invertible.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AffineMap<F> {
    matrix: FieldMatrix<F>,
    offset: Vec<F>,
}

impl<F: PrimeField> AffineMap<F> {
    pub fn new(matrix: FieldMatrix<F>, offset: Vec<F>) -> Result<Self> {
        check_len(matrix.rows(), offset.len())?;
        if !matrix.is_invertible() {
            return Err(Error::SingularAffine);
        }
        Ok(Self { matrix, offset })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: FieldMatrix::identity(dim),
            offset: vec![F::zero(); dim],
        }
    }

    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Self> {
        let matrix = random_invertible_matrix(dim, rng)?;
        let offset = random_vector(dim, rng);
        Ok(Self { matrix, offset })
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    pub fn matrix(&self) -> &FieldMatrix<F> {
        &self.matrix
    }

    pub fn offset(&self) -> &[F] {
        &self.offset
    }

    pub fn apply(&self, x: &[F]) -> Result<Vec<F>> {
        Ok(vec_add(&self.matrix.mul_vec(x)?, &self.offset))
    }

    /// Returns `x` with `apply(x) = y`.
    pub fn invert(&self, y: &[F]) -> Result<Vec<F>> {
        check_len(self.dim(), y.len())?;
        let rhs = vec_sub(y, &self.offset);
        Ok(solve_linear(&self.matrix, &rhs)?.expect("affine matrix is invertible by construction"))
    }

    pub fn encode_into(&self, out: &mut Vec<u8>) {
        put_u32(out, self.dim() as u32);
        put_raw_elements(out, self.matrix.entries());
        put_raw_elements(out, &self.offset);
    }

    pub fn decode_from(r: &mut Reader<'_>) -> Result<Self> {
        let dim = r.u32()? as usize;
        if dim == 0 || dim > 4096 {
            return Err(Error::Malformed(format!("implausible affine dimension {dim}")));
        }
        let entries = r.raw_elements(dim * dim)?;
        let offset = r.raw_elements(dim)?;
        Self::new(FieldMatrix::from_entries(dim, dim, entries)?, offset)
            .map_err(|e| Error::Malformed(e.to_string()))
    }
}

/// Oil-and-vinegar central map: variables `0..v` are vinegar, `v..v+o` oil,
/// and no polynomial has an oil×oil monomial.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct UovCentralMap<F> {
    oil: usize,
    vinegar: usize,
    map: QuadraticMap<F>,
}

impl<F: PrimeField> UovCentralMap<F> {
    pub fn new(oil: usize, vinegar: usize, polys: Vec<QuadraticPoly<F>>) -> Result<Self> {
        check_len(oil, polys.len())?;
        let n = oil + vinegar;
        let map = QuadraticMap::new(n, polys)?;
        for (k, p) in map.polys.iter().enumerate() {
            for i in vinegar..n {
                for j in i..n {
                    if !p.quad(i, j).is_zero() {
                        return Err(Error::OilOilTerm(k));
                    }
                }
            }
        }
        Ok(Self { oil, vinegar, map })
    }

    pub fn random<R: Rng + ?Sized>(oil: usize, vinegar: usize, rng: &mut R) -> Self {
        let n = oil + vinegar;
        let polys = (0..oil)
            .map(|_| {
                let mut p = QuadraticPoly::random(n, rng);
                for i in vinegar..n {
                    for j in i..n {
                        p.set_quad(i, j, F::zero());
                    }
                }
                p
            })
            .collect();
        Self {
            oil,
            vinegar,
            map: QuadraticMap { n, polys },
        }
    }

    pub fn oil(&self) -> usize {
        self.oil
    }

    pub fn vinegar(&self) -> usize {
        self.vinegar
    }

    pub fn as_map(&self) -> &QuadraticMap<F> {
        &self.map
    }

    pub fn evaluate(&self, z: &[F]) -> Result<Vec<F>> {
        self.map.evaluate(z)
    }

    /// Finds `z` with `F(z) = target` by fixing random vinegar values and
    /// solving the resulting `o × o` linear system in the oil variables.
    pub fn invert<R: Rng + ?Sized>(&self, target: &[F], rng: &mut R) -> Result<Vec<F>> {
        check_len(self.oil, target.len())?;
        let (o, v) = (self.oil, self.vinegar);
        for _ in 0..VINEGAR_RETRY_CAP {
            let vin: Vec<F> = random_vector(v, rng);
            let mut a = FieldMatrix::zero(o, o);
            let mut rhs = Vec::with_capacity(o);
            for (k, p) in self.map.polys.iter().enumerate() {
                // fixed part: vinegar×vinegar, vinegar-linear, constant
                let mut fixed = p.constant;
                for i in 0..v {
                    let mut s = p.lin[i];
                    for j in i..v {
                        s += p.quad(i, j) * vin[j];
                    }
                    fixed += vin[i] * s;
                }
                rhs.push(target[k] - fixed);
                for c in 0..o {
                    let col = v + c;
                    let mut coeff = p.lin[col];
                    for i in 0..v {
                        coeff += p.quad(i, col) * vin[i];
                    }
                    a.set(k, c, coeff);
                }
            }
            if let Some(oil) = solve_linear(&a, &rhs)? {
                let mut z = vin;
                z.extend(oil);
                return Ok(z);
            }
        }
        Err(Error::InversionFailure(VINEGAR_RETRY_CAP))
    }
}

/// Expands `x ↦ S(F(T(x)))` into explicit quadratic coefficients.
///
/// Writing `T(x) = A x + b` and one central polynomial as `yᵀ M y + L·y + c`
/// with `M` upper triangular, the substituted polynomial has quadratic form
/// `Aᵀ M A`, linear part `Aᵀ((M + Mᵀ) b + L)` and constant `bᵀ M b + L·b + c`.
/// The outer `S` then takes linear combinations of those polynomials.
pub fn compose_public<F: PrimeField>(
    s: &AffineMap<F>,
    f: &UovCentralMap<F>,
    t: &AffineMap<F>,
) -> Result<QuadraticMap<F>> {
    let n = f.map.n;
    let m = f.map.polys.len();
    check_len(n, t.dim())?;
    check_len(m, s.dim())?;
    let a = &t.matrix;
    let b = &t.offset;
    let at = a.transpose();

    let substituted: Vec<QuadraticPoly<F>> = f
        .map
        .polys
        .iter()
        .map(|p| {
            let mut full = FieldMatrix::zero(n, n);
            for i in 0..n {
                for j in i..n {
                    full.set(i, j, p.quad(i, j));
                }
            }
            let qa = at.mul(&full.mul(a)?)?;
            let mut out = QuadraticPoly::zero(n);
            for r in 0..n {
                out.set_quad(r, r, qa.get(r, r));
                for c in r + 1..n {
                    out.set_quad(r, c, qa.get(r, c) + qa.get(c, r));
                }
            }
            let mb = full.mul_vec(b)?;
            let mtb = full.transpose().mul_vec(b)?;
            let inner: Vec<F> = (0..n).map(|i| mb[i] + mtb[i] + p.lin[i]).collect();
            out.lin = at.mul_vec(&inner)?;
            let btmb = b.iter().zip(&mb).fold(F::zero(), |acc, (&x, &y)| acc + x * y);
            let lb = p.lin.iter().zip(b).fold(F::zero(), |acc, (&x, &y)| acc + x * y);
            out.constant = btmb + lb + p.constant;
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let polys = (0..m)
        .map(|k| {
            let mut acc = QuadraticPoly::zero(n);
            for (l, sub) in substituted.iter().enumerate() {
                let coeff = s.matrix.get(k, l);
                if !coeff.is_zero() {
                    acc.scaled_add(coeff, sub);
                }
            }
            acc.constant += s.offset[k];
            acc
        })
        .collect();
    Ok(QuadraticMap { n, polys })
}

/// `T⁻¹(F⁻¹(S⁻¹(target)))`: a preimage of `target` under the composed map.
pub fn invert_public<F: PrimeField, R: Rng + ?Sized>(
    s: &AffineMap<F>,
    f: &UovCentralMap<F>,
    t: &AffineMap<F>,
    target: &[F],
    rng: &mut R,
) -> Result<Vec<F>> {
    let y = s.invert(target)?;
    let z = f.invert(&y, rng)?;
    t.invert(&z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::Fp;
    use num_traits::{One, Zero};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    type F = Fp<31>;

    fn f(v: u64) -> F {
        F::new(v)
    }

    fn rng(seed: u64) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(seed)
    }

    /// Term-by-term evaluator kept independent of `QuadraticPoly::eval`.
    fn naive_eval(p: &QuadraticPoly<F>, x: &[F]) -> F {
        let n = p.num_vars();
        let mut acc = p.constant();
        for i in 0..n {
            for j in i..n {
                acc += p.quad(i, j) * x[i] * x[j];
            }
            acc += p.lin()[i] * x[i];
        }
        acc
    }

    fn single_monomial_x1x2() -> QuadraticMap<F> {
        let mut p = QuadraticPoly::zero(2);
        p.set_quad(0, 1, F::one());
        QuadraticMap::new(2, vec![p]).unwrap()
    }

    #[test]
    fn evaluate_at_zero_gives_constants() {
        let map = QuadraticMap::<F>::random(6, 3, &mut rng(1));
        assert_eq!(map.evaluate(&[F::zero(); 6]).unwrap(), map.constants());
    }

    #[test]
    fn single_monomial_evaluation() {
        let map = single_monomial_x1x2();
        assert_eq!(map.evaluate(&[f(2), f(3)]).unwrap(), vec![f(6)]);
    }

    #[test]
    fn evaluate_matches_naive() {
        let mut r = rng(2);
        let map = QuadraticMap::<F>::random(9, 4, &mut r);
        for _ in 0..50 {
            let x: Vec<F> = random_vector(9, &mut r);
            let expected: Vec<F> = map.polys().iter().map(|p| naive_eval(p, &x)).collect();
            assert_eq!(map.evaluate(&x).unwrap(), expected);
        }
    }

    #[test]
    fn evaluate_rejects_wrong_length() {
        let map = QuadraticMap::<F>::random(4, 2, &mut rng(3));
        assert!(matches!(
            map.evaluate(&[F::zero(); 3]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(map.polar_form(&[F::zero(); 4], &[F::zero(); 5]).is_err());
    }

    #[test]
    fn polar_form_basics() {
        let map = single_monomial_x1x2();
        assert_eq!(map.polar_form(&[f(1), f(0)], &[f(0), f(1)]).unwrap(), vec![f(1)]);

        let mut r = rng(4);
        let map = QuadraticMap::<F>::random(5, 3, &mut r);
        let y: Vec<F> = random_vector(5, &mut r);
        let x: Vec<F> = random_vector(5, &mut r);
        assert_eq!(map.polar_form(&[F::zero(); 5], &y).unwrap(), vec![F::zero(); 3]);
        assert_eq!(map.polar_form(&x, &y).unwrap(), map.polar_form(&y, &x).unwrap());
    }

    #[test]
    fn uov_random_has_no_oil_oil_terms() {
        for seed in 0..10 {
            let c = UovCentralMap::<F>::random(4, 8, &mut rng(seed));
            for p in c.as_map().polys() {
                for i in 8..12 {
                    for j in i..12 {
                        assert!(p.quad(i, j).is_zero());
                    }
                }
            }
            // constructor re-validates
            UovCentralMap::new(4, 8, c.as_map().polys().to_vec()).unwrap();
        }
    }

    #[test]
    fn uov_constructor_rejects_oil_oil() {
        let mut p = QuadraticPoly::<F>::zero(2);
        p.set_quad(1, 1, F::one());
        assert_eq!(UovCentralMap::new(1, 1, vec![p]), Err(Error::OilOilTerm(0)));
    }

    #[test]
    fn invert_central_hand_example() {
        // F(z) = z_v * z_o, target t => oil = t / vinegar
        let mut p = QuadraticPoly::<F>::zero(2);
        p.set_quad(0, 1, F::one());
        let central = UovCentralMap::new(1, 1, vec![p]).unwrap();
        let t = f(7);
        let z = central.invert(&[t], &mut rng(5)).unwrap();
        let a = z[0];
        assert!(!a.is_zero());
        assert_eq!(z[1], t * a.inv().unwrap());
    }

    #[test]
    fn invert_central_postcondition() {
        let mut r = rng(6);
        let central = UovCentralMap::<F>::random(4, 8, &mut r);
        for _ in 0..50 {
            let t: Vec<F> = random_vector(4, &mut r);
            let z = central.invert(&t, &mut r).unwrap();
            assert_eq!(central.evaluate(&z).unwrap(), t);
        }
    }

    #[test]
    fn invert_zero_central_map_fails() {
        let central = UovCentralMap::new(
            2,
            4,
            vec![QuadraticPoly::<F>::zero(6), QuadraticPoly::zero(6)],
        )
        .unwrap();
        assert_eq!(
            central.invert(&[f(1), f(0)], &mut rng(7)),
            Err(Error::InversionFailure(VINEGAR_RETRY_CAP))
        );
    }

    #[test]
    fn affine_inverse_hand_example() {
        let a = AffineMap::new(FieldMatrix::from_rows(vec![vec![f(2)]]).unwrap(), vec![f(5)])
            .unwrap();
        assert_eq!(a.invert(&[f(6)]).unwrap(), vec![f(16)]);
        let id = AffineMap::<F>::identity(3);
        assert_eq!(id.invert(&[f(1), f(2), f(3)]).unwrap(), vec![f(1), f(2), f(3)]);
    }

    #[test]
    fn affine_round_trip() {
        let mut r = rng(8);
        for _ in 0..20 {
            let a = AffineMap::<F>::random(7, &mut r).unwrap();
            let y: Vec<F> = random_vector(7, &mut r);
            assert_eq!(a.apply(&a.invert(&y).unwrap()).unwrap(), y);
        }
    }

    #[test]
    fn affine_rejects_singular() {
        assert_eq!(
            AffineMap::new(FieldMatrix::<F>::zero(2, 2), vec![F::zero(); 2]),
            Err(Error::SingularAffine)
        );
    }

    #[test]
    fn compose_with_identities_reproduces_central() {
        let central = UovCentralMap::<F>::random(3, 6, &mut rng(9));
        let p = compose_public(&AffineMap::identity(3), &central, &AffineMap::identity(9)).unwrap();
        assert_eq!(&p, central.as_map());
    }

    #[test]
    fn compose_matches_pointwise() {
        let mut r = rng(10);
        let s = AffineMap::<F>::random(4, &mut r).unwrap();
        let t = AffineMap::<F>::random(12, &mut r).unwrap();
        let central = UovCentralMap::random(4, 8, &mut r);
        let p = compose_public(&s, &central, &t).unwrap();
        for _ in 0..100 {
            let x: Vec<F> = random_vector(12, &mut r);
            let pointwise = s
                .apply(&central.evaluate(&t.apply(&x).unwrap()).unwrap())
                .unwrap();
            assert_eq!(p.evaluate(&x).unwrap(), pointwise);
        }
    }

    #[test]
    fn compose_exhaustive_over_f2() {
        type G = Fp<2>;
        let mut r = rng(11);
        for _ in 0..10 {
            let s = AffineMap::<G>::random(1, &mut r).unwrap();
            let t = AffineMap::<G>::random(2, &mut r).unwrap();
            let central = UovCentralMap::<G>::random(1, 1, &mut r);
            let p = compose_public(&s, &central, &t).unwrap();
            for bits in 0..4u64 {
                let x = vec![G::new(bits & 1), G::new(bits >> 1)];
                let pointwise = s
                    .apply(&central.evaluate(&t.apply(&x).unwrap()).unwrap())
                    .unwrap();
                assert_eq!(p.evaluate(&x).unwrap(), pointwise);
            }
        }
    }

    #[test]
    fn compose_dimension_mismatch() {
        let mut r = rng(12);
        let central = UovCentralMap::<F>::random(2, 4, &mut r);
        assert!(compose_public(&AffineMap::identity(3), &central, &AffineMap::identity(6)).is_err());
        assert!(compose_public(&AffineMap::identity(2), &central, &AffineMap::identity(5)).is_err());
    }

    #[test]
    fn invert_public_round_trip_desk() {
        let mut r = rng(13);
        let s = AffineMap::<F>::random(4, &mut r).unwrap();
        let t = AffineMap::<F>::random(12, &mut r).unwrap();
        let central = UovCentralMap::random(4, 8, &mut r);
        let p = compose_public(&s, &central, &t).unwrap();
        for _ in 0..100 {
            let target: Vec<F> = random_vector(4, &mut r);
            let x = invert_public(&s, &central, &t, &target, &mut r).unwrap();
            assert_eq!(p.evaluate(&x).unwrap(), target);
        }
    }

    #[test]
    fn invert_public_with_identities_equals_central() {
        let central = UovCentralMap::<F>::random(4, 8, &mut rng(14));
        let target = vec![f(1), f(2), f(3), f(4)];
        let via_public = invert_public(
            &AffineMap::identity(4),
            &central,
            &AffineMap::identity(12),
            &target,
            &mut rng(15),
        )
        .unwrap();
        let direct = central.invert(&target, &mut rng(15)).unwrap();
        assert_eq!(via_public, direct);
    }

    #[test]
    fn encoding_round_trip_and_count() {
        let map = QuadraticMap::<F>::random(12, 4, &mut rng(16));
        let bytes = map.encode();
        assert_eq!(map.element_count(), 364);
        assert_eq!(bytes.len(), 12 + 364);
        assert_eq!(QuadraticMap::decode(&bytes).unwrap(), map);
        assert!(QuadraticMap::<Fp<29>>::decode(&bytes).is_err());
    }
}
