//! A fixed law on `SL_d(Q)` with full support and finite first height moment.
//!
//! Index `k = 0` is the identity. For `k >= 1`, `k - 1` is split by the Cantor pairing into
//! a word length and a word code, the code is split again into letters, and each letter
//! names an elementary matrix `I + r E_{ij}` with `r` a signed Calkin–Wilf rational. Every
//! element of `SL_d(Q)` is a finite product of elementary matrices, so every element
//! appears. `k` is proposed with `P(k) = 2^{-(k+1)}` and accepted with probability
//! `1 / (1 + H⁺(f(k)))`, where `H⁺` is the upper end of the height enclosure at 64 bits.

use num_bigint::BigInt;
use num_integer::Roots;
use num_rational::BigRational;
use rand::RngCore;
use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use super::rng::uniform_open0;
use crate::error::{Error, Result};
use crate::ratmat::{height_upper, RationalMatrix};

/// Precision of the height used in the acceptance weight.
pub const WEIGHT_PRECISION: u32 = 64;

/// Inverse of the Cantor pairing `(x, y) ↦ (x+y)(x+y+1)/2 + y`.
pub fn cantor_unpair(z: u128) -> (u128, u128) {
    let w = ((8 * z + 1).sqrt() - 1) / 2;
    let t = w * (w + 1) / 2;
    let y = z - t;
    (w - y, y)
}

/// The `n`-th positive rational of the Calkin–Wilf sequence, `n >= 1`.
pub fn calkin_wilf(n: u128) -> BigRational {
    assert!(n >= 1);
    let (mut a, mut b) = (BigInt::from(1), BigInt::from(1));
    let bits = 128 - n.leading_zeros();
    for i in (0..bits - 1).rev() {
        if (n >> i) & 1 == 0 {
            b = &a + &b;
        } else {
            a = &a + &b;
        }
    }
    BigRational::new(a, b)
}

fn letter(dim: usize, n: u128) -> RationalMatrix {
    let pairs = (dim * (dim - 1)) as u128;
    let which = (n % pairs) as usize;
    let idx = n / pairs;
    let i = which / (dim - 1);
    let mut j = which % (dim - 1);
    if j >= i {
        j += 1;
    }
    let q = calkin_wilf(idx / 2 + 1);
    let r = if idx % 2 == 1 { -q } else { q };
    RationalMatrix::elementary(dim, i, j, r)
}

/// The enumeration `f : N -> SL_d(Q)`.
pub fn enumerate_sl(dim: usize, k: u64) -> RationalMatrix {
    if k == 0 {
        return RationalMatrix::identity(dim);
    }
    let (len, mut code) = cantor_unpair((k - 1) as u128);
    let mut m = RationalMatrix::identity(dim);
    for _ in 0..len {
        let (a, rest) = cantor_unpair(code);
        m = m.mul(&letter(dim, a)).expect("same dimension");
        code = rest;
    }
    m.mul(&letter(dim, code)).expect("same dimension")
}

type Entry = (RationalMatrix, f64);

fn enumerated_with_height(dim: usize, k: u64) -> Result<Entry> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, u64), Entry>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(e) = cache.lock().expect("cache poisoned").get(&(dim, k)) {
        return Ok(e.clone());
    }
    let g = enumerate_sl(dim, k);
    let h = height_upper(&g, WEIGHT_PRECISION)?.to_f64_dir(crate::real::Rounding::Up);
    cache
        .lock()
        .expect("cache poisoned")
        .insert((dim, k), (g.clone(), h));
    Ok((g, h))
}

/// Index `k` of one draw of the full-support law, optionally conditioned on `H⁺ <= height_budget`.
pub fn sample_full_support_index<R: RngCore + ?Sized>(
    rng: &mut R,
    dim: usize,
    height_budget: Option<f64>,
    max_trials: u64,
) -> Result<u64> {
    if height_budget.is_some_and(|b| !(b >= 0.0)) {
        return Err(Error::invalid("height budget must be nonnegative"));
    }
    for _ in 0..max_trials {
        // geometric proposal: number of leading zero bits
        let mut k = 0u64;
        while rng.next_u64() & 1 == 0 {
            k += 1;
        }
        let (_, h) = enumerated_with_height(dim, k)?;
        if height_budget.is_some_and(|b| h > b) {
            continue;
        }
        if uniform_open0(rng) * (1.0 + h) <= 1.0 {
            return Ok(k);
        }
    }
    Err(Error::RejectionCap(max_trials))
}

/// One draw of the full-support law with its height upper bound.
pub fn sample_full_support_rational<R: RngCore + ?Sized>(
    rng: &mut R,
    dim: usize,
    height_budget: Option<f64>,
    max_trials: u64,
) -> Result<(RationalMatrix, f64)> {
    let k = sample_full_support_index(rng, dim, height_budget, max_trials)?;
    enumerated_with_height(dim, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::rng::trial_rng;
    use crate::ratmat::rat;

    #[test]
    fn pairing_and_rationals() {
        assert_eq!(cantor_unpair(0), (0, 0));
        assert_eq!(cantor_unpair(1), (1, 0));
        assert_eq!(cantor_unpair(2), (0, 1));
        let firsts: Vec<_> = (1..=5).map(calkin_wilf).collect();
        assert_eq!(
            firsts,
            vec![rat(1, 1), rat(1, 2), rat(2, 1), rat(1, 3), rat(3, 2)]
        );
    }

    #[test]
    fn enumeration_is_unimodular() {
        assert_eq!(enumerate_sl(3, 0), RationalMatrix::identity(3));
        for k in 0..200 {
            assert!(enumerate_sl(2, k).is_unimodular());
        }
        assert_eq!(
            enumerate_sl(2, 1),
            RationalMatrix::elementary(2, 0, 1, rat(1, 1))
        );
    }

    #[test]
    fn identity_is_an_atom_and_budget_is_respected() {
        let mut rng = trial_rng(5, 0);
        let mut ids = 0;
        for _ in 0..400 {
            let (g, h) = sample_full_support_rational(&mut rng, 2, Some(2.0), 1000).unwrap();
            assert!(h <= 2.0);
            if g == RationalMatrix::identity(2) {
                ids += 1;
            }
        }
        assert!(ids > 0);
        assert!(sample_full_support_rational(&mut rng, 2, Some(-1.0), 10).is_err());
    }
}
