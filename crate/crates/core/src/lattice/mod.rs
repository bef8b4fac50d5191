//! Exact systoles of unimodular rational lattices `g·Z^d` and Mahler compact sets.

mod brute;
mod enumerate;
pub mod reduce;

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::ratmat::{format_rational, RationalMatrix, DEFAULT_ENTRY_BIT_BUDGET, MAX_DIM};
use crate::real::serde_dyadic::DECIMAL_DIGITS;
use crate::real::{exp_point, Dyadic, Interval, Rounding};

pub use brute::{brute_force_systole_sq, certified_radius};

/// Working precision for `-log δ`.
pub const NEG_LOG_PRECISION: u32 = 128;

/// The lattice spanned by the columns of a unimodular matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeBasis {
    basis: RationalMatrix,
}

impl LatticeBasis {
    pub fn new(basis: RationalMatrix) -> Result<Self> {
        Ok(LatticeBasis {
            basis: basis.into_unimodular()?,
        })
    }

    pub fn standard(dim: usize) -> Self {
        LatticeBasis {
            basis: RationalMatrix::identity(dim),
        }
    }

    pub fn matrix(&self) -> &RationalMatrix {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// `g · self`.
    pub fn transform(&self, g: &RationalMatrix) -> Result<Self> {
        LatticeBasis::new(g.mul(&self.basis)?)
    }

    /// Columns of `q·g` as integer vectors, together with `q`.
    pub(crate) fn integer_columns(&self) -> (Vec<Vec<BigInt>>, BigInt) {
        let q = BigInt::from(self.basis.denominator_lcm());
        let d = self.dim();
        let cols = (0..d)
            .map(|j| {
                (0..d)
                    .map(|i| {
                        let e = self.basis.get(i, j);
                        e.numer() * (&q / e.denom())
                    })
                    .collect()
            })
            .collect();
        (cols, q)
    }
}

/// Exact systole data: `δ²`, a shortest coefficient vector and `-log δ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SystoleResult {
    pub delta_sq: BigRational,
    pub witness: Vec<BigInt>,
    pub neg_log_delta: Interval,
}

impl Serialize for SystoleResult {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("SystoleResult", 3)?;
        st.serialize_field("delta_sq", &format_rational(&self.delta_sq))?;
        let witness: Vec<serde_json::Value> = self
            .witness
            .iter()
            .map(|x| match x.to_i64() {
                Some(v) => serde_json::Value::from(v),
                None => serde_json::Value::from(x.to_string()),
            })
            .collect();
        st.serialize_field("witness", &witness)?;
        let mid = self
            .neg_log_delta
            .lo()
            .add_exact(self.neg_log_delta.hi())
            .shl(-1);
        st.serialize_field(
            "neg_log_delta",
            &mid.to_decimal_dir(DECIMAL_DIGITS, Rounding::Down),
        )?;
        st.end()
    }
}

/// `-½ ln(δ²)` enclosure.
pub fn neg_log_from_sq(delta_sq: &BigRational, prec: u32) -> Interval {
    let w = prec + 16;
    let ln_num = Interval::point(Dyadic::from_int(delta_sq.numer().clone()))
        .ln(w)
        .expect("positive");
    let ln_den = Interval::point(Dyadic::from_int(delta_sq.denom().clone()))
        .ln(w)
        .expect("positive");
    ln_den.sub(&ln_num, w).shl(-1).round(prec)
}

/// Sign so that the last nonzero coordinate is positive.
fn normalize_sign(x: &mut [BigInt]) {
    if let Some(last) = x.iter().rev().find(|v| !v.is_zero()) {
        if last.is_negative() {
            x.iter_mut().for_each(|v| *v = -&*v);
        }
    }
}

/// Deterministic tie order: compare from the last coordinate backward, so that `e_1`
/// precedes `e_2` and so on.
fn witness_order(a: &[BigInt], b: &[BigInt]) -> Ordering {
    a.iter().rev().cmp(b.iter().rev())
}

pub fn systole_sq(b: &LatticeBasis) -> Result<SystoleResult> {
    systole_sq_with_budget(b, DEFAULT_ENTRY_BIT_BUDGET)
}

/// Exact shortest vector: integer scaling, Lagrange–Gauss (d = 2) or LLL with δ = 3/4,
/// then exhaustive enumeration within the first reduced vector's length.
pub fn systole_sq_with_budget(b: &LatticeBasis, budget: u64) -> Result<SystoleResult> {
    let d = b.dim();
    if !(2..=MAX_DIM).contains(&d) {
        return Err(Error::UnsupportedDimension(d));
    }
    b.matrix().check_budget(budget)?;
    let (cols, q) = b.integer_columns();
    let reduced = if d == 2 {
        reduce::gauss(cols[0].clone(), cols[1].clone())
    } else {
        reduce::lll(cols)
    };
    let (best, coeffs) = enumerate::shortest_vectors(&reduced.basis);
    let mut witnesses: Vec<Vec<BigInt>> = coeffs
        .iter()
        .map(|x| {
            let mut w: Vec<BigInt> = (0..d)
                .map(|r| {
                    reduced
                        .transform
                        .iter()
                        .zip(x)
                        .map(|(t, c)| &t[r] * c)
                        .sum()
                })
                .collect();
            normalize_sign(&mut w);
            w
        })
        .collect();
    witnesses.sort_by(|a, b| witness_order(a, b));
    witnesses.dedup();
    let witness = witnesses
        .into_iter()
        .next()
        .expect("a shortest vector exists");
    let delta_sq = BigRational::new(best, &q * &q);
    let neg_log_delta = neg_log_from_sq(&delta_sq, NEG_LOG_PRECISION);
    Ok(SystoleResult {
        delta_sq,
        witness,
        neg_log_delta,
    })
}

/// Whether `-log δ(b) <= bound`, i.e. `δ² >= e^{-2·bound}`. Decided with interval
/// enclosures of the exponential at increasing precision; a tie that no precision up to
/// 8192 bits separates counts as inside (the set is closed).
pub fn in_mahler_compact(b: &LatticeBasis, bound: f64) -> Result<bool> {
    if !(bound >= 0.0) || !bound.is_finite() {
        return Err(Error::invalid("bound must be a finite nonnegative number"));
    }
    let s = systole_sq(b)?;
    Ok(delta_sq_within(&s.delta_sq, bound))
}

/// `δ² >= e^{-2·bound}` with the closed-set convention on undecidable ties.
pub fn delta_sq_within(delta_sq: &BigRational, bound: f64) -> bool {
    let x = Dyadic::from_f64(-2.0 * bound).expect("finite");
    let mut prec = 128;
    while prec <= 8192 {
        let e = exp_point(&x, prec);
        if e.hi().cmp_rational(delta_sq).is_le() {
            return true;
        }
        if e.lo().cmp_rational(delta_sq).is_gt() {
            return false;
        }
        prec *= 2;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratmat::rat;

    #[test]
    fn standard_lattice() {
        for d in 2..=5 {
            let s = systole_sq(&LatticeBasis::standard(d)).unwrap();
            assert_eq!(s.delta_sq, rat(1, 1));
            let mut e1 = vec![BigInt::zero(); d];
            e1[0] = BigInt::from(1);
            assert_eq!(s.witness, e1);
            assert_eq!(s.neg_log_delta, Interval::zero());
        }
    }

    #[test]
    fn contracted_axis() {
        let b = LatticeBasis::new(RationalMatrix::diag_pow2(2, 10)).unwrap();
        let s = systole_sq(&b).unwrap();
        assert_eq!(s.delta_sq, rat(1, 1 << 20));
        assert_eq!(s.witness, vec![BigInt::zero(), BigInt::from(1)]);
    }

    #[test]
    fn skewed_example() {
        let m = RationalMatrix::from_ratio_rows(&[&[(4, 1), (1, 12)], &[(0, 1), (1, 4)]]).unwrap();
        let b = LatticeBasis::new(m).unwrap();
        let s = systole_sq(&b).unwrap();
        assert_eq!(s.delta_sq, rat(5, 72));
        assert_eq!(s.witness, vec![BigInt::zero(), BigInt::from(1)]);
        assert_eq!(brute_force_systole_sq(&b, 100).unwrap(), rat(5, 72));
        let json = serde_json::to_string(&s).unwrap();
        assert!(json.starts_with(r#"{"delta_sq":"5/72","witness":[0,1],"neg_log_delta":"1.33"#));
    }

    #[test]
    fn mahler_membership() {
        assert!(in_mahler_compact(&LatticeBasis::standard(2), 0.1).unwrap());
        let far = LatticeBasis::new(RationalMatrix::diag_pow2(2, 10)).unwrap();
        assert!(!in_mahler_compact(&far, 1.0).unwrap());
        let sheared = LatticeBasis::new(RationalMatrix::shear(2, rat(1, 2))).unwrap();
        assert!(in_mahler_compact(&sheared, 0.01).unwrap());
        assert!(delta_sq_within(&rat(1, 1), 0.0));
    }

    #[test]
    fn brute_force_small_cases() {
        let z2 = LatticeBasis::standard(2);
        assert_eq!(brute_force_systole_sq(&z2, 3).unwrap(), rat(1, 1));
        let d =
            LatticeBasis::new(RationalMatrix::diag(vec![rat(4, 1), rat(1, 4)]).unwrap()).unwrap();
        assert_eq!(brute_force_systole_sq(&d, 3).unwrap(), rat(1, 16));
        assert!(brute_force_systole_sq(&d, 0).is_err());
    }
}
