//! Scalar laws: push-forwards of a uniform seed `t` by the record maps.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::rng::uniform_open0;
use crate::error::{Error, Result};
use crate::real::{exp_rational, ln_int, Dyadic, Interval};

/// Working precision of scalar log-values.
pub const SCALAR_PRECISION: u32 = 96;

/// Integers above `2^MATERIALIZE_BITS` are kept in log form only.
pub const MATERIALIZE_BITS: u64 = 1 << 16;

const MAX_FLOOR_PRECISION: u32 = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarKind {
    /// `t ↦ exp(t^-2)`.
    HeavyRecordExp,
    /// `t ↦ ⌊t^-p⌋`.
    PowerFloor { p: f64 },
    /// `t ↦ t^-p`.
    PowerReal { p: f64 },
    /// `t ↦ ⌊t^-3⌋`, the law with `P(l) = l^{-1/3} - (l+1)^{-1/3}` on `l >= 1`.
    SimpleRecordCube,
    /// `t` picks one entry of a table uniformly.
    BoundedMixtureComponent { values: Vec<f64> },
}

/// A scalar law: the seed `t` is uniform on `(t_min, domain_end]` (or `(0, domain_end]`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarLawSpec {
    pub kind: ScalarKind,
    #[serde(default = "one_f64")]
    pub domain_end: f64,
    #[serde(default)]
    pub t_min: Option<f64>,
}

fn one_f64() -> f64 {
    1.0
}

impl ScalarLawSpec {
    pub fn new(kind: ScalarKind) -> Self {
        ScalarLawSpec {
            kind,
            domain_end: 1.0,
            t_min: None,
        }
    }

    pub fn heavy_record_exp() -> Self {
        Self::new(ScalarKind::HeavyRecordExp)
    }

    pub fn power_floor(p: f64, domain_end: f64) -> Self {
        ScalarLawSpec {
            domain_end,
            ..Self::new(ScalarKind::PowerFloor { p })
        }
    }

    pub fn power_real(p: f64) -> Self {
        Self::new(ScalarKind::PowerReal { p })
    }

    pub fn simple_record_cube() -> Self {
        Self::new(ScalarKind::SimpleRecordCube)
    }

    pub fn bounded(values: Vec<f64>) -> Self {
        Self::new(ScalarKind::BoundedMixtureComponent { values })
    }

    pub fn with_t_min(mut self, t_min: f64) -> Self {
        self.t_min = Some(t_min);
        self
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            ScalarKind::PowerFloor { p } | ScalarKind::PowerReal { p } => {
                if !(p.is_finite() && *p > 1.0) {
                    return Err(Error::invalid(format!("exponent p = {p} must exceed 1")));
                }
            }
            ScalarKind::BoundedMixtureComponent { values }
                if values.is_empty() || values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) =>
            {
                return Err(Error::invalid(
                    "bounded component needs a nonempty table of finite nonnegative values",
                ));
            }
            _ => {}
        }
        if self.domain_end != 1.0 && self.domain_end != 0.5 {
            return Err(Error::invalid("domain_end must be 1 or 1/2"));
        }
        if let Some(t) = self.t_min {
            if !(t > 0.0 && t < self.domain_end) {
                return Err(Error::invalid(format!(
                    "t_min = {t} must lie in (0, {})",
                    self.domain_end
                )));
            }
        }
        Ok(())
    }

    /// Maps a uniform `u ∈ (0,1]` onto the seed interval.
    pub fn seed_from_uniform(&self, u: f64) -> f64 {
        let lo = self.t_min.unwrap_or(0.0);
        let t = lo + u * (self.domain_end - lo);
        t.clamp(f64::MIN_POSITIVE, self.domain_end)
    }
}

/// A positive (or zero) sampled value carried by its logarithm.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogDomainValue {
    /// Enclosure of `ln(value)`; `None` when the value is exactly 0.
    pub log_value: Option<Interval>,
    /// `⌊value⌋` when it has at most [`MATERIALIZE_BITS`] bits.
    pub exact_exponent: Option<BigInt>,
}

impl LogDomainValue {
    fn from_integer(n: BigInt) -> Self {
        let log_value = if n.is_zero() {
            None
        } else {
            Some(ln_int(&n, SCALAR_PRECISION))
        };
        LogDomainValue {
            log_value,
            exact_exponent: Some(n),
        }
    }

    /// Directed `f64` bounds on `ln ⌊value⌋` (`-inf` for a zero floor).
    pub fn floor_log_bounds(&self) -> (f64, f64) {
        if let Some(n) = &self.exact_exponent {
            if n.is_zero() {
                return (f64::NEG_INFINITY, f64::NEG_INFINITY);
            }
            let l = ln_int(n, 64);
            return (l.lower_f64(), l.upper_f64());
        }
        let l = self
            .log_value
            .as_ref()
            .expect("deferred floors come from positive values");
        // values are >= 2 here, so ⌊v⌋ >= v/2
        let lo = crate::real::directed::sub_down(l.lower_f64(), crate::real::directed::LN2_UP);
        (lo, l.upper_f64())
    }
}

fn ln_rational(t: &BigRational, prec: u32) -> Interval {
    let w = prec + 8;
    ln_int(t.numer(), w)
        .sub(&ln_int(t.denom(), w), w)
        .round(prec)
}

fn rational_pow(t: &BigRational, k: u32) -> BigRational {
    BigRational::new(t.numer().pow(k), t.denom().pow(k))
}

/// Estimated bit size of `e^{x}` from an enclosure of `x`.
fn bits_of_exp(log: &Interval) -> f64 {
    log.upper_f64() * std::f64::consts::LOG2_E
}

/// `⌊e^x⌋` for rational `x >= 1` (never an integer point, so enclosures decide it).
fn floor_exp(x: &BigRational) -> Result<BigInt> {
    let bits = x.to_f64().unwrap_or(f64::INFINITY) * std::f64::consts::LOG2_E;
    let mut prec = (bits.max(0.0) as u32) + 64;
    while prec <= MAX_FLOOR_PRECISION + bits as u32 {
        let e = exp_rational(x, prec);
        let f = e.lo().floor();
        if f == e.hi().floor() {
            return Ok(f);
        }
        prec *= 2;
    }
    Err(Error::PrecisionUnreachable(prec))
}

/// `⌊t^{-p}⌋` for `t ∈ (0, 1]`.
fn floor_pow(t: &BigRational, p: f64) -> Result<BigInt> {
    if p.fract() == 0.0 && p <= 1024.0 {
        let v = rational_pow(&t.recip(), p as u32);
        return Ok(v.floor().to_integer());
    }
    let py = Interval::from_f64(-p);
    let bits = -p * t.to_f64().unwrap_or(0.0).log2();
    let mut prec = (bits.max(0.0) as u32) + 64;
    let mut last = None;
    while prec <= MAX_FLOOR_PRECISION + bits as u32 {
        let lt = ln_rational(t, prec + 16);
        let v = lt.mul(&py, prec + 16).exp(prec);
        let f = v.lo().floor();
        if f == v.hi().floor() {
            return Ok(f);
        }
        last = Some(v.hi().floor());
        prec *= 2;
    }
    // Undecided: the value sits on an integer candidate `n`. Decide `t^{-p} >= n` exactly
    // when p has a small dyadic denominator, `p = r / 2^k`: `(1/t)^r >= n^{2^k}`.
    let n = last.expect("loop ran");
    let d = Dyadic::from_f64(p).expect("finite p");
    let k = (-d.exponent()).max(0) as u32;
    if k <= 8 {
        let r = d.mantissa() << (d.exponent().max(0) as usize);
        if let Some(r) = r.to_u32() {
            let lhs = rational_pow(&t.recip(), r);
            let rhs = BigRational::from_integer(n.clone().pow(1u32 << k));
            return Ok(if lhs >= rhs { n } else { n - 1 });
        }
    }
    Err(Error::PrecisionUnreachable(prec))
}

/// The law's value at the seed `t` (exact rational in `(0, 1]`).
pub fn scalar_value_at(law: &ScalarLawSpec, t: &BigRational) -> Result<LogDomainValue> {
    scalar_value_with_floor_limit(law, t, MATERIALIZE_BITS)
}

/// [`scalar_value_at`] keeping exact floors only up to `floor_bits` bits.
pub fn scalar_value_with_floor_limit(
    law: &ScalarLawSpec,
    t: &BigRational,
    floor_bits: u64,
) -> Result<LogDomainValue> {
    if !t.is_positive() || t > &BigRational::one() {
        return Err(Error::invalid("seed must lie in (0, 1]"));
    }
    let prec = SCALAR_PRECISION;
    match &law.kind {
        ScalarKind::HeavyRecordExp => {
            let x = rational_pow(&t.recip(), 2);
            let log = Interval::from_rational(&x, prec);
            let exact_exponent = if bits_of_exp(&log) <= floor_bits as f64 {
                Some(floor_exp(&x)?)
            } else {
                None
            };
            Ok(LogDomainValue {
                log_value: Some(log),
                exact_exponent,
            })
        }
        ScalarKind::PowerReal { p } | ScalarKind::PowerFloor { p } => {
            let log = ln_rational(t, prec + 16)
                .mul(&Interval::from_f64(-p), prec + 16)
                .round(prec);
            let floor = if bits_of_exp(&log) <= floor_bits as f64 {
                Some(floor_pow(t, *p)?)
            } else {
                None
            };
            match (&law.kind, floor) {
                (ScalarKind::PowerFloor { .. }, Some(n)) => Ok(LogDomainValue::from_integer(n)),
                (ScalarKind::PowerFloor { .. }, None) => {
                    // keep only the log, widened by the floor's relative error
                    let lo = log.lo().sub(
                        &ln_int(&BigInt::from(2), prec).hi().clone(),
                        prec,
                        crate::real::Rounding::Down,
                    );
                    Ok(LogDomainValue {
                        log_value: Some(Interval::new(lo, log.hi().clone())),
                        exact_exponent: None,
                    })
                }
                (_, floor) => Ok(LogDomainValue {
                    log_value: Some(log),
                    exact_exponent: floor,
                }),
            }
        }
        ScalarKind::SimpleRecordCube => {
            let v = rational_pow(&t.recip(), 3);
            Ok(LogDomainValue::from_integer(v.floor().to_integer()))
        }
        ScalarKind::BoundedMixtureComponent { values } => {
            let i = bounded_index(values.len(), t);
            let v = values[i];
            if v == 0.0 {
                return Ok(LogDomainValue {
                    log_value: None,
                    exact_exponent: Some(BigInt::zero()),
                });
            }
            let d = Dyadic::from_f64(v).expect("finite");
            let log = crate::real::ln_point(&d, prec);
            Ok(LogDomainValue {
                log_value: Some(log),
                exact_exponent: Some(d.floor()),
            })
        }
    }
}

/// Table index `⌈t·len⌉ - 1` for `t ∈ (0, 1]`.
pub(crate) fn bounded_index(len: usize, t: &BigRational) -> usize {
    let x = (t * BigRational::from_integer(len.into()))
        .ceil()
        .to_integer();
    (x.to_usize().unwrap_or(len).max(1) - 1).min(len - 1)
}

/// Draws the seed and evaluates the law.
pub fn sample_scalar<R: RngCore + ?Sized>(
    law: &ScalarLawSpec,
    rng: &mut R,
) -> Result<LogDomainValue> {
    let t = law.seed_from_uniform(uniform_open0(rng));
    scalar_value_at(law, &BigRational::from_float(t).expect("finite seed"))
}

/// `l^{-1/3} - (l+1)^{-1/3}` for `l >= 1`.
pub fn simple_record_pmf(l: u64, prec: u32) -> Result<Interval> {
    if l == 0 {
        return Err(Error::invalid("the simple-record law lives on l >= 1"));
    }
    let w = prec + 32;
    let third = Interval::from_ratio(-1, 3, w);
    let a = Interval::from_int(l).pow(&third, w).expect("positive");
    let b = Interval::from_int(l + 1).pow(&third, w).expect("positive");
    Ok(a.sub(&b, w).round(prec))
}

/// `P(⌊t^{-p}⌋ = l)` for `t` uniform on `(0, end]`, in floating point.
pub fn power_floor_pmf(p: f64, end: f64, l: u64) -> f64 {
    if l == 0 {
        return 0.0;
    }
    let hi = (l as f64).powf(-1.0 / p).min(end);
    let lo = ((l + 1) as f64).powf(-1.0 / p).min(end);
    (hi - lo) / end
}

/// Smallest `f64` seed floor `t_min` with `⌊t^{-3}⌋ <= cap` for every `t > t_min`.
pub fn simple_record_t_min(cap: u64) -> f64 {
    let c = BigRational::from_integer((cap + 1).into());
    let mut t = ((cap + 1) as f64).powf(-1.0 / 3.0);
    // need t^3 (cap+1) >= 1, so that t' > t implies t'^{-3} < cap + 1
    loop {
        let r = BigRational::from_float(t).expect("finite");
        if rational_pow(&r, 3) * &c >= BigRational::one() {
            return t;
        }
        t = t.next_up();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratmat::rat;
    use crate::real::ln2;

    #[test]
    fn heavy_record_at_one() {
        let v = scalar_value_at(&ScalarLawSpec::heavy_record_exp(), &rat(1, 1)).unwrap();
        assert_eq!(v.log_value.unwrap(), Interval::one());
        assert_eq!(v.exact_exponent, Some(BigInt::from(2)));
    }

    #[test]
    fn power_real_at_half() {
        let v = scalar_value_at(&ScalarLawSpec::power_real(2.0), &rat(1, 2)).unwrap();
        let log4 = ln2(128).mul_int(2, 128);
        assert!(v.log_value.unwrap().intersects(&log4));
        assert_eq!(v.exact_exponent, Some(BigInt::from(4)));
    }

    #[test]
    fn power_floor_at_tenth() {
        let v = scalar_value_at(&ScalarLawSpec::power_floor(2.0, 1.0), &rat(1, 10)).unwrap();
        assert_eq!(v.exact_exponent, Some(BigInt::from(100)));
        // non-integral exponent on an exact integer point: (1/4)^{-3/2} = 8
        let v = scalar_value_at(&ScalarLawSpec::power_floor(1.5, 1.0), &rat(1, 4)).unwrap();
        assert_eq!(v.exact_exponent, Some(BigInt::from(8)));
    }

    #[test]
    fn simple_record_values() {
        let law = ScalarLawSpec::simple_record_cube();
        assert_eq!(
            scalar_value_at(&law, &rat(1, 2)).unwrap().exact_exponent,
            Some(BigInt::from(8))
        );
        assert_eq!(
            scalar_value_at(&law, &rat(3, 4)).unwrap().exact_exponent,
            Some(BigInt::from(2))
        );
        let p1 = simple_record_pmf(1, 64).unwrap();
        assert!(
            p1.contains_f64(1.0 - 2f64.powf(-1.0 / 3.0)) || (p1.mid_f64() - 0.206299).abs() < 1e-6
        );
        assert!(simple_record_pmf(0, 64).is_err());
        let t = simple_record_t_min(5);
        let r = BigRational::from_float(t.next_up()).unwrap();
        assert!(scalar_value_at(&law, &r).unwrap().exact_exponent.unwrap() <= BigInt::from(5));
    }

    #[test]
    fn huge_heavy_record_stays_in_log_form() {
        let v = scalar_value_at(&ScalarLawSpec::heavy_record_exp(), &rat(1, 1000)).unwrap();
        assert!(v.exact_exponent.is_none());
        assert!(v.log_value.unwrap().contains_f64(1e6));
        let (lo, hi) = v_floor_bounds();
        assert!(lo <= hi);
    }

    fn v_floor_bounds() -> (f64, f64) {
        let v = scalar_value_at(&ScalarLawSpec::power_floor(2.0, 1.0), &rat(1, 7)).unwrap();
        v.floor_log_bounds()
    }

    #[test]
    fn validation() {
        assert!(ScalarLawSpec::power_floor(1.0, 1.0).validate().is_err());
        assert!(ScalarLawSpec::power_floor(2.0, 0.25).validate().is_err());
        assert!(ScalarLawSpec::heavy_record_exp()
            .with_t_min(1.5)
            .validate()
            .is_err());
        assert!(ScalarLawSpec::bounded(vec![]).validate().is_err());
        let json = serde_json::to_string(&ScalarLawSpec::power_floor(2.0, 0.5)).unwrap();
        let back: ScalarLawSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, ScalarLawSpec::power_floor(2.0, 0.5));
    }
}
