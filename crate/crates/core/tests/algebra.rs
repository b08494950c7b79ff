use num_traits::{One, Zero};
use pqmiss_core::gf::{random_invertible_matrix, random_vector, solve_linear, vec_add, vec_scale, vec_sub};
use pqmiss_core::hash::{rejection_bound, sample_field, tag};
use pqmiss_core::mqmap::{compose_public, AffineMap, QuadraticMap, UovCentralMap};
use pqmiss_core::{Gf31, PrimeField};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn gf() -> impl Strategy<Value = Gf31> {
    (0u64..31).prop_map(Gf31::from_u64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn field_axioms(a in gf(), b in gf(), c in gf()) {
        prop_assert_eq!((a + b) + c, a + (b + c));
        prop_assert_eq!((a * b) * c, a * (b * c));
        prop_assert_eq!(a * (b + c), a * b + a * c);
        prop_assert_eq!(a + b, b + a);
        prop_assert_eq!(a * b, b * a);
        prop_assert_eq!(a - a, Gf31::zero());
        prop_assert_eq!(a + (-a), Gf31::zero());
        prop_assert!(a.value() < 31);
    }

    #[test]
    fn inverse_law(a in 1u64..31) {
        let a = Gf31::from_u64(a);
        prop_assert_eq!(a * a.inv().unwrap(), Gf31::one());
    }

    #[test]
    fn solve_recovers_preimage(seed in any::<u64>(), dim in 1usize..10) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let a = random_invertible_matrix::<Gf31, _>(dim, &mut rng).unwrap();
        let x: Vec<Gf31> = random_vector(dim, &mut rng);
        let b = a.mul_vec(&x).unwrap();
        prop_assert_eq!(solve_linear(&a, &b).unwrap(), Some(x));
    }
}

#[test]
fn polar_form_is_bilinear_and_decomposes() {
    let mut rng = ChaCha20Rng::seed_from_u64(0x9a1);
    let (n, m) = (12, 4);
    let p = QuadraticMap::<Gf31>::random(n, m, &mut rng);
    let zero: Vec<Gf31> = vec![Gf31::zero(); n];
    let p0 = p.evaluate(&zero).unwrap();
    for _ in 0..1000 {
        let x1: Vec<Gf31> = random_vector(n, &mut rng);
        let x2: Vec<Gf31> = random_vector(n, &mut rng);
        let y: Vec<Gf31> = random_vector(n, &mut rng);
        let alpha = Gf31::random(&mut rng);
        let g = |a: &[Gf31], b: &[Gf31]| p.polar_form(a, b).unwrap();
        assert_eq!(g(&x1, &y), g(&y, &x1));
        assert_eq!(g(&vec_add(&x1, &x2), &y), vec_add(&g(&x1, &y), &g(&x2, &y)));
        assert_eq!(g(&vec_scale(alpha, &x1), &y), vec_scale(alpha, &g(&x1, &y)));
        let lhs = p.evaluate(&vec_add(&x1, &y)).unwrap();
        let rhs = vec_add(
            &vec_sub(&vec_add(&p.evaluate(&x1).unwrap(), &p.evaluate(&y).unwrap()), &p0),
            &g(&x1, &y),
        );
        assert_eq!(lhs, rhs);
    }
}

#[test]
fn composed_map_of_a_uov_trapdoor_is_still_quadratic() {
    // The polar form of S∘F∘T must be bilinear too; catches a missed cross term.
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let f = UovCentralMap::<Gf31>::random(4, 8, &mut rng);
    let s = AffineMap::random(4, &mut rng).unwrap();
    let t = AffineMap::random(12, &mut rng).unwrap();
    let p = compose_public(&s, &f, &t).unwrap();
    for _ in 0..200 {
        let x1: Vec<Gf31> = random_vector(12, &mut rng);
        let x2: Vec<Gf31> = random_vector(12, &mut rng);
        let y: Vec<Gf31> = random_vector(12, &mut rng);
        let g = |a: &[Gf31], b: &[Gf31]| p.polar_form(a, b).unwrap();
        assert_eq!(g(&vec_add(&x1, &x2), &y), vec_add(&g(&x1, &y), &g(&x2, &y)));
    }
}

#[test]
fn oil_oil_block_stays_empty() {
    let mut rng = ChaCha20Rng::seed_from_u64(8);
    for _ in 0..50 {
        let f = UovCentralMap::<Gf31>::random(4, 8, &mut rng);
        for poly in f.as_map().polys() {
            for i in 8..12 {
                for j in i..12 {
                    assert!(poly.quad(i, j).is_zero());
                }
            }
        }
    }
}

#[test]
fn rejection_sampling_is_uniform() {
    const DRAWS: usize = 100_000;
    assert_eq!(rejection_bound(31), 248);
    let xs: Vec<Gf31> = sample_field(tag::HASH2, &[b"uniformity"], DRAWS);
    let mut counts = [0usize; 31];
    for x in xs {
        counts[x.value() as usize] += 1;
    }
    let p = 1.0 / 31.0;
    let mean = DRAWS as f64 * p;
    let sigma = (DRAWS as f64 * p * (1.0 - p)).sqrt();
    for (r, &c) in counts.iter().enumerate() {
        assert!(
            (c as f64 - mean).abs() <= 5.0 * sigma,
            "residue {r}: {c} draws vs mean {mean:.1} ± 5·{sigma:.1}"
        );
    }
}
