use num_bigint::{BigInt, BigUint};
use serde::Serialize;

use super::{spectral_norm_enclosure, NormEnclosure, RationalMatrix};
use crate::error::{Error, Result};
use crate::real::{ln_point, Dyadic, Interval};

/// The constituents of the height `H(g) = ln max{‖g‖, ‖g⁻¹‖, q(g), q(g⁻¹)}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HeightProfile {
    pub norm: NormEnclosure,
    pub norm_inv: NormEnclosure,
    #[serde(serialize_with = "crate::real::serde_dyadic::ser_display")]
    pub q: BigUint,
    #[serde(serialize_with = "crate::real::serde_dyadic::ser_display")]
    pub q_inv: BigUint,
    #[serde(serialize_with = "crate::real::serde_dyadic::ser_interval")]
    pub height: Interval,
}

pub fn height_profile(a: &RationalMatrix, precision_bits: u32) -> Result<HeightProfile> {
    if !a.is_unimodular() {
        return Err(Error::NotUnimodular);
    }
    let inv = a.inverse()?;
    let norm = spectral_norm_enclosure(a, precision_bits)?;
    let norm_inv = spectral_norm_enclosure(&inv, precision_bits)?;
    let q = a.denominator_lcm();
    let q_inv = inv.denominator_lcm();
    let qmax = Dyadic::from_int(BigInt::from(q.clone().max(q_inv.clone())));
    let lo = norm
        .lower
        .clone()
        .max(norm_inv.lower.clone())
        .max(qmax.clone());
    let hi = norm.upper.clone().max(norm_inv.upper.clone()).max(qmax);
    let height = Interval::new(
        ln_point(&lo, precision_bits).lo().clone(),
        ln_point(&hi, precision_bits).hi().clone(),
    );
    Ok(HeightProfile {
        norm,
        norm_inv,
        q,
        q_inv,
        height,
    })
}

/// Upper end of the height enclosure.
pub fn height_upper(a: &RationalMatrix, precision_bits: u32) -> Result<Dyadic> {
    Ok(height_profile(a, precision_bits)?.height.hi().clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratmat::rat;
    use crate::real::ln2;

    #[test]
    fn identity_has_height_zero() {
        let h = height_profile(&RationalMatrix::identity(3), 64).unwrap();
        assert_eq!(h.height, Interval::zero());
    }

    #[test]
    fn diagonal_constituents_coincide() {
        for m in [1i64, 5, 10] {
            let h = height_profile(&RationalMatrix::diag_pow2(3, m), 64).unwrap();
            let p = Dyadic::pow2(m);
            assert_eq!(h.norm.lower, p);
            assert_eq!(h.norm_inv.upper, p);
            assert_eq!(h.q, BigUint::from(1u32) << m as usize);
            assert_eq!(h.q_inv, h.q);
            let expect = ln2(80).mul_int(m, 80);
            assert!(h.height.intersects(&expect));
            assert!(h.height.rel_width() < 1e-18);
        }
    }

    #[test]
    fn shear_third_is_dominated_by_denominator() {
        let h = height_profile(&RationalMatrix::shear(2, rat(1, 3)), 64).unwrap();
        assert_eq!(h.q, BigUint::from(3u32));
        assert!(h.norm.upper < Dyadic::from_int(3));
        assert!(h.height.contains_f64(3f64.ln()) || (h.height.mid_f64() - 3f64.ln()).abs() < 1e-15);
    }
}
