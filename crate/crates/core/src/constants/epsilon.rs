//! The escape-probability constant `ε_p = α a_p / (8K)` and its ingredients.

use num_bigint::BigInt;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::real::serde_dyadic::ser_interval;
use crate::real::{exp_point, ln_int, Dyadic, Interval};

/// Highest working precision tried before a comparison is declared undecidable.
pub const MAX_DECISION_PRECISION: u32 = 1 << 14;

/// Largest partial-sum length used for `a_p`.
const MAX_ZETA_TERMS: u64 = 1 << 17;

#[derive(Clone, Debug, Serialize)]
pub struct EpsilonPipeline {
    pub p: f64,
    pub precision_bits: u32,
    #[serde(serialize_with = "ser_interval")]
    pub alpha: Interval,
    #[serde(serialize_with = "ser_interval")]
    pub a_p: Interval,
    #[serde(rename = "K")]
    pub k: u64,
    #[serde(serialize_with = "ser_interval")]
    pub epsilon_p: Interval,
}

/// Enclosure of `α = ∏_{k≥2} (1 − e^{−k/30})` with relative width about `2^{-precision_bits}`.
///
/// The product is truncated at `K₀`; the tail factor lies in `[e^{−2T}, 1]` with
/// `T = e^{−K₀/30}/(e^{1/30} − 1)`, using `log(1 − x) ≥ −2x` for `x ≤ 1/2`.
pub fn alpha_enclosure(precision_bits: u32) -> Interval {
    let prec = precision_bits.max(8);
    // 2T <= 2^-(prec+2) once K0/30 >= ln(61) + (prec+2) ln 2
    let k0 = (30.0 * (61f64.ln() + (prec as f64 + 2.0) * std::f64::consts::LN_2)).ceil() as i64;
    let k0 = k0.max(21);
    let w = prec + 40;
    let mut prod = Interval::one();
    for k in 2..=k0 {
        let e = Interval::from_ratio(-k, 30, w + 8).exp(w);
        prod = prod.mul(&Interval::one().sub(&e, w), w);
    }
    let head = Interval::from_ratio(-k0, 30, w).exp(w);
    let denom = Interval::from_ratio(1, 30, w)
        .exp(w)
        .sub(&Interval::one(), w);
    let t_up = Interval::point(head.hi().clone())
        .div(&Interval::point(denom.lo().clone()), w)
        .expect("positive denominator")
        .hi()
        .clone();
    let tail_lo = exp_point(&t_up.shl(1).neg(), w).lo().clone();
    let tail = Interval::new(tail_lo, Dyadic::one());
    prod.mul(&tail, w).round(prec + 4)
}

fn check_p(p: f64) -> Result<()> {
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::invalid(format!(
            "p must be a finite real > 1, got {p}"
        )));
    }
    Ok(())
}

/// Bernoulli numbers `B_2, …, B_10` as `(numerator, denominator)`.
const BERNOULLI: [(i64, i64); 5] = [(1, 6), (-1, 30), (1, 42), (-1, 30), (5, 66)];

/// Enclosure of `ζ(p) = Σ_{k≥1} k^{−p}`.
///
/// Partial sum up to `N − 1`, then the tail `Σ_{k≥N}` is bracketed twice: by the integrals
/// `∫_N^∞ ≤ tail ≤ ∫_{N−1}^∞`, and by Euler–Maclaurin through the `B_8` term, whose
/// remainder for this completely monotone summand lies between the `B_10` term and zero.
/// The two brackets are intersected.
pub fn zeta_enclosure(p: f64, precision_bits: u32) -> Result<Interval> {
    check_p(p)?;
    let prec = precision_bits.max(16);
    let n = (((prec + 8) as f64 * std::f64::consts::LN_2 / (p + 9.0))
        .exp()
        .ceil() as u64)
        .clamp(32, MAX_ZETA_TERMS);
    let w = prec + 32 + (64 - n.leading_zeros());
    let pi = Interval::from_f64(p);
    let integral_p = p == p.trunc() && p <= 64.0;
    let term = |k: u64| -> Interval {
        if integral_p {
            Interval::from_int(k)
                .powi(-(p as i64), w)
                .expect("positive base")
        } else {
            ln_int(&BigInt::from(k), w).mul(&pi, w).neg().exp(w)
        }
    };
    let mut sum = Interval::zero();
    for k in 1..n {
        sum = sum.add(&term(k), w);
    }
    let pm1 = Interval::from_f64(p - 1.0);
    // x^{1-p}/(p-1)
    let integral_from = |x: u64| -> Interval {
        ln_int(&BigInt::from(x), w)
            .mul(&pm1, w)
            .neg()
            .exp(w)
            .div(&pm1, w)
            .expect("p > 1")
    };
    let f_n = term(n);
    let int_n = integral_from(n);
    let integral_bracket = Interval::new(int_n.lo().clone(), integral_from(n - 1).hi().clone());
    let nf = Interval::from_int(n);
    let n_sq_inv = nf.sqr(w).recip(w).expect("n > 0");
    // k-th correction B_{2k}/(2k)! (p)_{2k-1} N^{-p-2k+1}; (p)_r is the rising factorial
    let mut rising = pi.clone();
    let mut power = f_n.div(&nf, w).expect("n > 0");
    let mut factorial = Interval::from_int(2);
    let mut em = int_n.add(&f_n.shl(-1), w);
    let mut corrections = Vec::with_capacity(BERNOULLI.len());
    for (k, &(bn, bd)) in BERNOULLI.iter().enumerate() {
        let c = Interval::from_ratio(bn, bd, w)
            .mul(&rising, w)
            .mul(&power, w)
            .div(&factorial, w)
            .expect("nonzero");
        corrections.push(c);
        let r = 2 * k as i64 + 1;
        rising = rising
            .mul(&Interval::from_f64(p + r as f64), w)
            .mul(&Interval::from_f64(p + (r + 1) as f64), w);
        power = power.mul(&n_sq_inv, w);
        factorial = factorial.mul_int((r + 2) * (r + 3), w);
    }
    let last = corrections.pop().expect("nonempty");
    for c in &corrections {
        em = em.add(c, w);
    }
    let shifted = em.add(&last, w);
    let em_bracket = em.hull(&shifted);
    let tail = integral_bracket
        .intersect(&em_bracket)
        .ok_or_else(|| Error::invalid("tail brackets are disjoint"))?;
    Ok(sum.add(&tail, w).round(prec + 4))
}

/// Enclosure of `a_p = ζ(p)^{−1/p}`.
pub fn a_p_value(p: f64, precision_bits: u32) -> Result<Interval> {
    let prec = precision_bits.max(16);
    let z = zeta_enclosure(p, prec + 8)?;
    let w = prec + 16;
    let l = z.ln(w).expect("zeta > 1");
    let e = l.div(&Interval::from_f64(p), w).expect("p > 0").neg();
    Ok(e.exp(w).round(prec + 4))
}

/// Enclosure of `(1 + 2K) e^{−K}`.
fn k_lhs(k: u64, w: u32) -> Interval {
    let e = exp_point(&Dyadic::from_int(-(k as i64)), w);
    e.mul(&Interval::from_int(1 + 2 * k), w)
}

/// Decides `(1 + 2K) e^{−K} ≤ target` exactly, raising precision until the enclosure decides.
pub fn k_condition_holds(k: u64, target: &Dyadic) -> Result<bool> {
    let t = Interval::point(target.clone());
    let mut w = 64 + (64 - k.leading_zeros());
    loop {
        let lhs = k_lhs(k, w);
        if lhs.certainly_le(&t) {
            return Ok(true);
        }
        if lhs.certainly_gt(&t) {
            return Ok(false);
        }
        if w >= MAX_DECISION_PRECISION {
            return Err(Error::PrecisionUnreachable(w));
        }
        w *= 2;
    }
}

/// Minimal integer `K ≥ 0` with `(1 + 2K) e^{−K} ≤ alpha.lower / 2`.
///
/// The scan starts at 0 because the left side rises on `[0, 1/2]` before decaying.
pub fn smallest_k(alpha: &Interval) -> Result<u64> {
    if !alpha.lo().is_positive() {
        return Err(Error::invalid("alpha lower bound must be positive"));
    }
    let target = alpha.lo().shl(-1);
    for k in 0u64.. {
        if k_condition_holds(k, &target)? {
            return Ok(k);
        }
        if k > 1 << 40 {
            break;
        }
    }
    unreachable!("left side tends to zero")
}

/// `true` when `K` satisfies the condition and `K − 1` (if any) violates it.
pub fn k_is_minimal(alpha: &Interval, k: u64) -> Result<bool> {
    let target = alpha.lo().shl(-1);
    Ok(k_condition_holds(k, &target)? && (k == 0 || !k_condition_holds(k - 1, &target)?))
}

/// Full pipeline `ε_p = α a_p / (8K)` at the given precision.
pub fn epsilon_p(p: f64, precision_bits: u32) -> Result<EpsilonPipeline> {
    check_p(p)?;
    let prec = precision_bits.max(16);
    let alpha = alpha_enclosure(prec);
    let a_p = a_p_value(p, prec)?;
    let k = smallest_k(&alpha)?;
    if k == 0 {
        return Err(Error::invalid("K = 0 leaves epsilon undefined"));
    }
    let w = prec + 16;
    let epsilon_p = alpha
        .mul(&a_p, w)
        .div(&Interval::from_int(8 * k), w)
        .expect("K >= 1")
        .round(prec + 4);
    debug_assert!(epsilon_p.lo().is_positive());
    Ok(EpsilonPipeline {
        p,
        precision_bits: prec,
        alpha,
        a_p,
        k,
        epsilon_p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_is_small_and_positive() {
        let a = alpha_enclosure(64);
        assert!(a.lo().is_positive());
        assert!(a.upper_f64() < 1.0 - (-1.0f64 / 15.0).exp());
        assert!(a.rel_width() < 2f64.powi(-60));
    }

    #[test]
    fn zeta_two() {
        let z = zeta_enclosure(2.0, 64).unwrap();
        let pi2_6 = std::f64::consts::PI.powi(2) / 6.0;
        assert!((z.mid_f64() - pi2_6).abs() < 1e-15);
        assert!(z.rel_width() < 1e-18);
        let a2 = a_p_value(2.0, 64).unwrap();
        assert!((a2.mid_f64() - pi2_6.powf(-0.5)).abs() < 1e-15);
    }

    #[test]
    fn k_scan() {
        assert_eq!(smallest_k(&Interval::one()).unwrap(), 3);
        assert!(k_is_minimal(&Interval::one(), 3).unwrap());
        assert!(smallest_k(&Interval::from_int(2)).unwrap() <= 3);
        assert!(smallest_k(&Interval::zero()).is_err());
    }

    #[test]
    fn bad_p_is_rejected() {
        assert!(a_p_value(1.0, 32).is_err());
        assert!(epsilon_p(f64::NAN, 32).is_err());
    }
}
