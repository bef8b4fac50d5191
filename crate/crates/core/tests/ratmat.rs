use escape_core::ratmat::{
    height_profile, random_unimodular, random_vector, spectral_norm_enclosure, RationalMatrix,
};
use escape_core::Dyadic;
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Pow};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn matrix(seed: u64, dim: usize) -> RationalMatrix {
    random_unimodular(&mut ChaCha8Rng::seed_from_u64(seed), dim, 50)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inverse_is_exact(seed in any::<u64>(), dim in 2usize..=5) {
        let a = matrix(seed, dim);
        prop_assert!(a.is_unimodular());
        let inv = a.inverse().unwrap();
        prop_assert_eq!(a.mul(&inv).unwrap(), RationalMatrix::identity(dim));
        prop_assert_eq!(inv.mul(&a).unwrap(), RationalMatrix::identity(dim));
    }

    #[test]
    fn norm_enclosure_is_sound(seed in any::<u64>(), dim in 2usize..=4) {
        let a = matrix(seed, dim);
        let e = spectral_norm_enclosure(&a, 64).unwrap();
        prop_assert!(e.upper.cmp_rational(&a.max_abs_entry()).is_ge());
        prop_assert!(e.lower.mul_exact(&e.lower).cmp_rational(&a.frobenius_sq()).is_le());
        prop_assert!(e.upper.sub_exact(&e.lower) <= e.lower.shl(-60));
        let upper_sq = e.upper.mul_exact(&e.upper).to_rational();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        for _ in 0..100 {
            let v = random_vector(&mut rng, dim, 20);
            let av = a.mul_vec(&v);
            let num: BigRational = av.iter().map(|x| x * x).sum();
            let den: BigRational = v.iter().map(|x| x * x).sum();
            prop_assert!(num <= &upper_sq * &den);
        }
    }

    #[test]
    fn height_is_inversion_symmetric(seed in any::<u64>(), dim in 2usize..=4) {
        let a = matrix(seed, dim);
        let h = height_profile(&a, 64).unwrap().height;
        let hi = height_profile(&a.inverse().unwrap(), 64).unwrap().height;
        prop_assert!(h.intersects(&hi));
        prop_assert!(!h.lo().is_negative());
    }

    #[test]
    fn height_is_subadditive(s1 in any::<u64>(), s2 in any::<u64>(), dim in 2usize..=4) {
        let a = matrix(s1, dim);
        let b = matrix(s2, dim);
        let hab = height_profile(&a.mul(&b).unwrap(), 64).unwrap().height;
        let ha = height_profile(&a, 64).unwrap().height;
        let hb = height_profile(&b, 64).unwrap().height;
        prop_assert!(hab.lo() <= &ha.hi().add_exact(hb.hi()));
    }

    #[test]
    fn inverse_norm_power_bound(seed in any::<u64>(), dim in 2usize..=4) {
        let a = matrix(seed, dim);
        let inv = a.inverse().unwrap();
        let n = spectral_norm_enclosure(&a, 64).unwrap();
        let ni = spectral_norm_enclosure(&inv, 64).unwrap();
        let mut bound = Dyadic::one();
        for _ in 0..dim - 1 {
            bound = bound.mul_exact(&n.upper);
        }
        let slack = Dyadic::one().add_exact(&Dyadic::pow2(-64));
        prop_assert!(ni.lower <= bound.mul_exact(&slack));
        let q = a.denominator_lcm();
        let qi = inv.denominator_lcm();
        prop_assert!(qi <= Pow::pow(q, (dim - 1) as u32));
    }
}

#[test]
fn spec_examples() {
    let n13 = RationalMatrix::shear(2, BigRational::new(1.into(), 3.into()));
    let h = height_profile(&n13, 64).unwrap();
    assert_eq!(h.q, BigUint::from(3u32));
    assert_eq!(h.q_inv, BigUint::from(3u32));
    let ln3 = 3f64.ln();
    assert!((h.height.mid_f64() - ln3).abs() < 1e-15);
    assert!((h.norm.interval().mid_f64() - 1.180_460_07).abs() < 1e-6);
    assert!(BigRational::one() <= h.norm.upper.to_rational());
}
