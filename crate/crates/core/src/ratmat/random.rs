use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Signed;
use rand::Rng;

use super::{rat, RationalMatrix};

fn small_rational<R: Rng + ?Sized>(rng: &mut R, num: i64, den: i64) -> BigRational {
    rat(rng.random_range(-num..=num), rng.random_range(1..=den))
}

fn within(m: &RationalMatrix, bound: i64) -> bool {
    let b = BigInt::from(bound);
    m.entries()
        .iter()
        .all(|e| e.numer().abs() <= b && e.denom() <= &b)
}

/// Random element of `SL_d(Q)` whose entries have numerators and denominators at most
/// `bound` in absolute value: a short word in elementary shears and rational diagonals,
/// resampled until it fits.
pub fn random_unimodular<R: Rng + ?Sized>(rng: &mut R, dim: usize, bound: i64) -> RationalMatrix {
    loop {
        let mut m = RationalMatrix::identity(dim);
        let len = rng.random_range(1..=2 * dim);
        for _ in 0..len {
            let f = if rng.random_bool(0.25) {
                let a = rng.random_range(1..=5i64);
                let b = rng.random_range(1..=5i64);
                let i = rng.random_range(0..dim);
                let j = (i + rng.random_range(1..dim)) % dim;
                let mut v = vec![rat(1, 1); dim];
                v[i] = rat(a, b);
                v[j] = rat(b, a);
                RationalMatrix::diag(v).expect("dim >= 2")
            } else {
                let i = rng.random_range(0..dim);
                let j = (i + rng.random_range(1..dim)) % dim;
                RationalMatrix::elementary(dim, i, j, small_rational(rng, 4, 4))
            };
            m = m.mul(&f).expect("same dimension");
        }
        if within(&m, bound) {
            return m;
        }
    }
}

/// Random rational vector with small entries, not all zero.
pub fn random_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize, bound: i64) -> Vec<BigRational> {
    loop {
        let v: Vec<BigRational> = (0..dim)
            .map(|_| small_rational(rng, bound, bound))
            .collect();
        if v.iter().any(|x| !num_traits::Zero::is_zero(x)) {
            return v;
        }
    }
}
