use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use super::poly::{char_poly, Sturm};
use super::RationalMatrix;
use crate::error::{Error, Result};
use crate::real::{Dyadic, Interval, Rounding};

/// Two-sided enclosure of a spectral norm.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NormEnclosure {
    #[serde(serialize_with = "crate::real::serde_dyadic::ser_down")]
    pub lower: Dyadic,
    #[serde(serialize_with = "crate::real::serde_dyadic::ser_up")]
    pub upper: Dyadic,
    pub precision_bits: u32,
    /// `false` when the bisection cap was hit before the requested relative width.
    pub converged: bool,
}

impl NormEnclosure {
    pub fn interval(&self) -> Interval {
        Interval::new(self.lower.clone(), self.upper.clone())
    }

    /// Squared enclosure `[lower², upper²]`, exact.
    pub fn squared(&self) -> Interval {
        Interval::new(
            self.lower.mul_exact(&self.lower),
            self.upper.mul_exact(&self.upper),
        )
    }
}

fn half(a: &BigRational, b: &BigRational) -> BigRational {
    (a + b) / BigRational::from_integer(BigInt::from(2))
}

fn sqrt_enclosure(lo: &BigRational, hi: &BigRational, prec: u32) -> (Dyadic, Dyadic) {
    let w = prec + 8;
    let lo_d = Dyadic::from_rational(lo, w, Rounding::Down);
    let hi_d = Dyadic::from_rational(hi, w, Rounding::Up);
    (
        lo_d.sqrt(prec + 4, Rounding::Down),
        hi_d.sqrt(prec + 4, Rounding::Up),
    )
}

/// Largest-eigenvalue bracket `(lo, hi]` for a symmetric positive semidefinite matrix,
/// or an exact value when it can be pinned.
fn lambda_max(s: &RationalMatrix, prec: u32) -> Result<(BigRational, BigRational, bool)> {
    let n = s.dim();
    let diag_max = (0..n)
        .map(|i| s.get(i, i).clone())
        .max()
        .unwrap_or_else(BigRational::zero);
    let trace: BigRational = (0..n).map(|i| s.get(i, i).clone()).sum();
    let p = char_poly(s).squarefree();
    let sturm = Sturm::new(&p);
    if sturm.roots_above(&diag_max) == 0 {
        return Ok((diag_max.clone(), diag_max, true));
    }
    let mut lo = diag_max;
    let mut hi = trace;
    let target = BigRational::new(BigInt::one(), BigInt::one() << (prec as u64 + 3));
    let cap = 4 * prec as usize + 4096;
    for _ in 0..cap {
        if &hi - &lo <= &lo * &target {
            return Ok((lo, hi, true));
        }
        let mid = half(&lo, &hi);
        if p.eval(&mid).is_zero() && sturm.roots_above(&mid) == 0 {
            return Ok((mid.clone(), mid, true));
        }
        if sturm.roots_above(&mid) >= 1 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, hi, false))
}

/// Encloses the largest singular value of `a` to relative width about `2^-precision_bits`.
///
/// The largest eigenvalue of `aᵀa` is isolated with a Sturm sequence of its exact
/// characteristic polynomial and bisected between the largest squared column norm
/// and the trace.
pub fn spectral_norm_enclosure(a: &RationalMatrix, precision_bits: u32) -> Result<NormEnclosure> {
    if a.dim() > super::MAX_DIM {
        return Err(Error::UnsupportedDimension(a.dim()));
    }
    if precision_bits == 0 {
        return Err(Error::invalid("precision_bits must be positive"));
    }
    let s = a.gram();
    let (lo, hi, converged) = lambda_max(&s, precision_bits)?;
    let (mut lower, mut upper) = sqrt_enclosure(&lo, &hi, precision_bits);
    // perfect squares come out exact
    if lo == hi {
        if let Some(r) = exact_sqrt(&lo) {
            lower = r.clone();
            upper = r;
        }
    }
    debug_assert!(upper.cmp_rational(&a.max_abs_entry()).is_ge());
    debug_assert!(lower
        .mul_exact(&lower)
        .cmp_rational(&a.frobenius_sq())
        .is_le());
    Ok(NormEnclosure {
        lower,
        upper,
        precision_bits,
        converged,
    })
}

/// Square root of a nonnegative rational when it is a dyadic number.
fn exact_sqrt(x: &BigRational) -> Option<Dyadic> {
    if x.is_negative() {
        return None;
    }
    let (n, d) = (x.numer().magnitude(), x.denom().magnitude());
    let rn = n.sqrt();
    let rd = d.sqrt();
    if &(&rn * &rn) != n || &(&rd * &rd) != d {
        return None;
    }
    let tz = rd.trailing_zeros().unwrap_or(0);
    if rd != (num_bigint::BigUint::one() << tz) {
        return None;
    }
    Some(Dyadic::new(BigInt::from(rn), -(tz as i64)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratmat::rat;

    #[test]
    fn identity_is_exact() {
        let e = spectral_norm_enclosure(&RationalMatrix::identity(3), 64).unwrap();
        assert_eq!(e.lower, Dyadic::one());
        assert_eq!(e.upper, Dyadic::one());
    }

    #[test]
    fn diagonal_is_exact() {
        for m in [1, 5, 10, 300] {
            let e = spectral_norm_enclosure(&RationalMatrix::diag_pow2(2, m), 64).unwrap();
            assert_eq!(e.lower, Dyadic::pow2(m));
            assert_eq!(e.upper, Dyadic::pow2(m));
        }
    }

    #[test]
    fn golden_ratio_shear() {
        let e = spectral_norm_enclosure(&RationalMatrix::shear(2, rat(1, 1)), 64).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!(e.lower.to_f64() <= phi + 1e-15 && phi - 1e-15 <= e.upper.to_f64());
        assert!(e.converged);
        // relative width within the requested precision
        let w = e.upper.sub_exact(&e.lower);
        assert!(w <= e.lower.shl(-64));
        // φ² = φ + 1 brackets the exact root
        let lo2 = e.lower.mul_exact(&e.lower);
        let hi2 = e.upper.mul_exact(&e.upper);
        assert!(lo2 <= e.lower.add_exact(&Dyadic::one()));
        assert!(hi2 >= e.upper.add_exact(&Dyadic::one()));
    }

    #[test]
    fn rank_one_and_rotation() {
        let r = RationalMatrix::from_ratio_rows(&[&[(3, 5), (-4, 5)], &[(4, 5), (3, 5)]]).unwrap();
        let e = spectral_norm_enclosure(&r, 64).unwrap();
        assert_eq!(e.lower, Dyadic::one());
        assert_eq!(e.upper, Dyadic::one());
    }
}
