//! Box enumeration oracle, independent of reduction.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use super::LatticeBasis;
use crate::error::{Error, Result};

/// Minimum exact squared norm of `g x` over nonzero integer `x` in `[-r, r]^d`.
pub fn brute_force_systole_sq(b: &LatticeBasis, coeff_radius: u64) -> Result<BigRational> {
    if coeff_radius == 0 {
        return Err(Error::invalid("coefficient radius must be at least 1"));
    }
    let (cols, q) = b.integer_columns();
    let d = cols.len();
    let r = coeff_radius as i64;
    let max_entry = cols
        .iter()
        .flatten()
        .map(|x| x.abs())
        .max()
        .unwrap_or_else(BigInt::zero);
    let bound = &max_entry * BigInt::from(r) * BigInt::from(d as i64);
    let best = if bound.bits() < 62 {
        let small: Vec<Vec<i128>> = cols
            .iter()
            .map(|c| c.iter().map(|x| x.to_i128().expect("fits")).collect())
            .collect();
        BigInt::from(scan_i128(&small, r))
    } else {
        scan_big(&cols, r)
    };
    Ok(BigRational::new(best, &q * &q))
}

fn next(x: &mut [i64], r: i64) -> bool {
    for v in x.iter_mut() {
        if *v < r {
            *v += 1;
            return true;
        }
        *v = -r;
    }
    false
}

fn scan_i128(cols: &[Vec<i128>], r: i64) -> i128 {
    let d = cols.len();
    let mut x = vec![-r; d];
    let mut best = i128::MAX;
    let mut v = vec![0i128; d];
    loop {
        if x.iter().any(|&c| c != 0) {
            v.iter_mut().for_each(|e| *e = 0);
            for (col, &c) in cols.iter().zip(&x) {
                if c != 0 {
                    for (e, g) in v.iter_mut().zip(col) {
                        *e += g * c as i128;
                    }
                }
            }
            let n: i128 = v.iter().map(|e| e * e).sum();
            best = best.min(n);
        }
        if !next(&mut x, r) {
            return best;
        }
    }
}

fn scan_big(cols: &[Vec<BigInt>], r: i64) -> BigInt {
    let d = cols.len();
    let mut x = vec![-r; d];
    let mut best: Option<BigInt> = None;
    loop {
        if x.iter().any(|&c| c != 0) {
            let mut v = vec![BigInt::zero(); d];
            for (col, &c) in cols.iter().zip(&x) {
                if c != 0 {
                    for (e, g) in v.iter_mut().zip(col) {
                        *e += g * c;
                    }
                }
            }
            let n: BigInt = v.iter().map(|e| e * e).sum();
            if best.as_ref().is_none_or(|b| &n < b) {
                best = Some(n);
            }
        }
        if !next(&mut x, r) {
            return best.expect("box has nonzero points");
        }
    }
}

/// A coefficient radius that provably contains a shortest vector: for `v = g x` shortest,
/// `|x_i| <= ‖row_i(g⁻¹)‖ · ‖v‖` and `‖v‖² <= delta_sq_upper`.
pub fn certified_radius(b: &LatticeBasis, delta_sq_upper: &BigRational) -> Result<u64> {
    let inv = b.matrix().inverse()?;
    let d = inv.dim();
    let mut r = BigInt::zero();
    for i in 0..d {
        let row_sq: BigRational = (0..d).map(|j| inv.get(i, j) * inv.get(i, j)).sum();
        let t = row_sq * delta_sq_upper;
        // floor(sqrt(t)) via the integer square root of floor(t)
        let fl = t.numer() / t.denom();
        r = r.max(fl.sqrt());
    }
    r.to_u64()
        .map(|x| x.max(1))
        .ok_or_else(|| Error::invalid("certified radius too large"))
}
