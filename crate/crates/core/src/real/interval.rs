use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;

use super::dyadic::{Dyadic, Rounding};

/// Closed interval `[lo, hi]` with dyadic endpoints. Every operation rounds outward.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Interval {
    lo: Dyadic,
    hi: Dyadic,
}

use Rounding::{Down, Up};

thread_local! {
    static LN2_CACHE: RefCell<HashMap<u32, Interval>> = RefCell::new(HashMap::new());
}

impl Interval {
    pub fn new(lo: Dyadic, hi: Dyadic) -> Self {
        assert!(lo <= hi, "interval endpoints out of order");
        Interval { lo, hi }
    }

    pub fn point(x: Dyadic) -> Self {
        Interval {
            lo: x.clone(),
            hi: x,
        }
    }

    pub fn zero() -> Self {
        Interval::point(Dyadic::zero())
    }

    pub fn one() -> Self {
        Interval::point(Dyadic::one())
    }

    pub fn from_int(n: impl Into<BigInt>) -> Self {
        Interval::point(Dyadic::from_int(n))
    }

    /// Exact point interval; panics on non-finite input.
    pub fn from_f64(x: f64) -> Self {
        Interval::point(Dyadic::from_f64(x).expect("finite f64"))
    }

    pub fn from_rational(q: &BigRational, prec: u32) -> Self {
        Interval {
            lo: Dyadic::from_rational(q, prec, Down),
            hi: Dyadic::from_rational(q, prec, Up),
        }
    }

    pub fn from_ratio(num: i64, den: i64, prec: u32) -> Self {
        Interval::from_rational(&BigRational::new(num.into(), den.into()), prec)
    }

    pub fn lo(&self) -> &Dyadic {
        &self.lo
    }

    pub fn hi(&self) -> &Dyadic {
        &self.hi
    }

    pub fn width(&self) -> Dyadic {
        self.hi.sub_exact(&self.lo)
    }

    pub fn mid_f64(&self) -> f64 {
        self.lo.add_exact(&self.hi).shl(-1).to_f64()
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, x: &Dyadic) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn contains_rational(&self, q: &BigRational) -> bool {
        self.lo.cmp_rational(q).is_le() && self.hi.cmp_rational(q).is_ge()
    }

    pub fn contains_f64(&self, x: f64) -> bool {
        Dyadic::from_f64(x).is_some_and(|d| self.contains(&d))
    }

    pub fn is_subset_of(&self, o: &Self) -> bool {
        o.lo <= self.lo && self.hi <= o.hi
    }

    pub fn intersects(&self, o: &Self) -> bool {
        self.lo <= o.hi && o.lo <= self.hi
    }

    pub fn intersect(&self, o: &Self) -> Option<Self> {
        let lo = self.lo.clone().max(o.lo.clone());
        let hi = self.hi.clone().min(o.hi.clone());
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn hull(&self, o: &Self) -> Self {
        Interval {
            lo: self.lo.clone().min(o.lo.clone()),
            hi: self.hi.clone().max(o.hi.clone()),
        }
    }

    pub fn certainly_lt(&self, o: &Self) -> bool {
        self.hi < o.lo
    }

    pub fn certainly_le(&self, o: &Self) -> bool {
        self.hi <= o.lo
    }

    pub fn certainly_gt(&self, o: &Self) -> bool {
        o.certainly_lt(self)
    }

    pub fn certainly_ge(&self, o: &Self) -> bool {
        o.certainly_le(self)
    }

    pub fn is_positive(&self) -> bool {
        self.lo.is_positive()
    }

    pub fn round(&self, prec: u32) -> Self {
        Interval {
            lo: self.lo.round(prec, Down),
            hi: self.hi.round(prec, Up),
        }
    }

    pub fn neg(&self) -> Self {
        Interval {
            lo: self.hi.neg(),
            hi: self.lo.neg(),
        }
    }

    pub fn abs(&self) -> Self {
        if !self.lo.is_negative() {
            self.clone()
        } else if !self.hi.is_positive() {
            self.neg()
        } else {
            Interval {
                lo: Dyadic::zero(),
                hi: self.hi.clone().max(self.lo.neg()),
            }
        }
    }

    /// Multiplication by `2^k`, exact.
    pub fn shl(&self, k: i64) -> Self {
        Interval {
            lo: self.lo.shl(k),
            hi: self.hi.shl(k),
        }
    }

    pub fn add(&self, o: &Self, prec: u32) -> Self {
        Interval {
            lo: self.lo.add(&o.lo, prec, Down),
            hi: self.hi.add(&o.hi, prec, Up),
        }
    }

    pub fn sub(&self, o: &Self, prec: u32) -> Self {
        self.add(&o.neg(), prec)
    }

    pub fn mul(&self, o: &Self, prec: u32) -> Self {
        if !self.lo.is_negative() && !o.lo.is_negative() {
            return Interval {
                lo: self.lo.mul(&o.lo, prec, Down),
                hi: self.hi.mul(&o.hi, prec, Up),
            };
        }
        let c = [
            self.lo.mul_exact(&o.lo),
            self.lo.mul_exact(&o.hi),
            self.hi.mul_exact(&o.lo),
            self.hi.mul_exact(&o.hi),
        ];
        let lo = c.iter().min().cloned().unwrap_or_else(Dyadic::zero);
        let hi = c.iter().max().cloned().unwrap_or_else(Dyadic::zero);
        Interval {
            lo: lo.round(prec, Down),
            hi: hi.round(prec, Up),
        }
    }

    pub fn mul_int(&self, k: i64, prec: u32) -> Self {
        self.mul(&Interval::from_int(k), prec)
    }

    pub fn sqr(&self, prec: u32) -> Self {
        let a = self.abs();
        Interval {
            lo: a.lo.mul(&a.lo, prec, Down),
            hi: a.hi.mul(&a.hi, prec, Up),
        }
    }

    /// `None` when the divisor straddles zero.
    pub fn div(&self, o: &Self, prec: u32) -> Option<Self> {
        if !o.lo.is_positive() && !o.hi.is_negative() {
            return None;
        }
        // extremes of a/b over the box sit at its corners
        let cands = [
            (&self.lo, &o.lo),
            (&self.lo, &o.hi),
            (&self.hi, &o.lo),
            (&self.hi, &o.hi),
        ];
        let lo = cands
            .iter()
            .map(|(a, b)| a.div(b, prec, Down))
            .min()
            .unwrap_or_else(Dyadic::zero);
        let hi = cands
            .iter()
            .map(|(a, b)| a.div(b, prec, Up))
            .max()
            .unwrap_or_else(Dyadic::zero);
        Some(Interval { lo, hi })
    }

    pub fn recip(&self, prec: u32) -> Option<Self> {
        Interval::one().div(self, prec)
    }

    /// `None` if the interval reaches below zero.
    pub fn sqrt(&self, prec: u32) -> Option<Self> {
        if self.lo.is_negative() {
            return None;
        }
        Some(Interval {
            lo: self.lo.sqrt(prec, Down),
            hi: self.hi.sqrt(prec, Up),
        })
    }

    pub fn powi(&self, n: i64, prec: u32) -> Option<Self> {
        if n < 0 {
            return self.powi(-n, prec)?.recip(prec);
        }
        let mut base = self.clone();
        let mut acc = Interval::one();
        let mut k = n as u64;
        let w = prec + 8 + 64 - k.leading_zeros();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base, w);
            }
            k >>= 1;
            if k > 0 {
                base = base.sqr(w);
            }
        }
        // even powers of sign-straddling intervals are nonnegative
        if n % 2 == 0 && acc.lo.is_negative() {
            acc.lo = Dyadic::zero();
        }
        Some(acc.round(prec))
    }

    pub fn max(&self, o: &Self) -> Self {
        Interval {
            lo: self.lo.clone().max(o.lo.clone()),
            hi: self.hi.clone().max(o.hi.clone()),
        }
    }

    pub fn min(&self, o: &Self) -> Self {
        Interval {
            lo: self.lo.clone().min(o.lo.clone()),
            hi: self.hi.clone().min(o.hi.clone()),
        }
    }

    pub fn exp(&self, prec: u32) -> Self {
        Interval {
            lo: exp_point(&self.lo, prec).lo,
            hi: exp_point(&self.hi, prec).hi,
        }
    }

    /// Natural log; `None` unless the interval is strictly positive.
    pub fn ln(&self, prec: u32) -> Option<Self> {
        if !self.lo.is_positive() {
            return None;
        }
        Some(Interval {
            lo: ln_point(&self.lo, prec).lo,
            hi: ln_point(&self.hi, prec).hi,
        })
    }

    /// `self^y` for positive `self`, via `exp(y ln self)`.
    pub fn pow(&self, y: &Self, prec: u32) -> Option<Self> {
        let w = prec + 16;
        let l = self.ln(w)?;
        Some(l.mul(y, w).exp(prec))
    }

    pub fn lower_f64(&self) -> f64 {
        self.lo.to_f64_dir(Down)
    }

    pub fn upper_f64(&self) -> f64 {
        self.hi.to_f64_dir(Up)
    }

    /// Relative width `(hi - lo)/|lo|` as a float estimate (infinite when `lo` is zero).
    pub fn rel_width(&self) -> f64 {
        if self.lo.is_zero() {
            if self.hi.is_zero() {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.width().to_f64() / self.lo.abs().to_f64()
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision().unwrap_or(17);
        write!(
            f,
            "[{}, {}]",
            self.lo.to_decimal_dir(digits, Down),
            self.hi.to_decimal_dir(digits, Up)
        )
    }
}

fn guard_bits(n: i64) -> u32 {
    64 - n.unsigned_abs().leading_zeros()
}

/// Enclosure of `ln 2`, cached per precision.
pub fn ln2(prec: u32) -> Interval {
    if let Some(v) = LN2_CACHE.with(|c| c.borrow().get(&prec).cloned()) {
        return v;
    }
    let w = prec + 16;
    let third = Dyadic::one();
    let three = Dyadic::from_int(3);
    let lo = atanh_series(&third.div(&three, w, Down), w, Down);
    let hi = atanh_series(&third.div(&three, w, Up), w, Up);
    let v = Interval {
        lo: lo.shl(1).round(prec, Down),
        hi: hi.shl(1).round(prec, Up),
    };
    LN2_CACHE.with(|c| c.borrow_mut().insert(prec, v.clone()));
    v
}

/// `sum z^(2i+1)/(2i+1)` for `0 <= z <= 1/3`, rounded in `dir` including the truncation tail.
fn atanh_series(z: &Dyadic, w: u32, dir: Rounding) -> Dyadic {
    if z.is_negative() {
        return atanh_series(&z.neg(), w, dir.flip()).neg();
    }
    if z.is_zero() {
        return Dyadic::zero();
    }
    let z2 = z.mul(z, w, dir);
    let stop = Dyadic::pow2(-(w as i64) - 4);
    let mut p = z.clone();
    let mut sum = Dyadic::zero();
    let mut i: i64 = 0;
    while p > stop {
        let term = p.div(&Dyadic::from_int(2 * i + 1), w, dir);
        sum = sum.add(&term, w, dir);
        p = p.mul(&z2, w, dir);
        i += 1;
    }
    if dir == Up {
        // tail <= p/((2i+1)(1-z^2)) <= 2p for z^2 <= 1/9
        sum = sum.add(&p.shl(1), w, Up);
    }
    sum
}

/// `e^y` for `0 <= y <= 1/2`, rounded in `dir`.
fn exp_small(y: &Dyadic, w: u32, dir: Rounding) -> Dyadic {
    debug_assert!(!y.is_negative());
    if y.is_zero() {
        return Dyadic::one();
    }
    let s: i64 = 10;
    let wi = w + s as u32 + 8;
    let x = y.shl(-s);
    let stop = Dyadic::pow2(-(wi as i64) - 4);
    let mut t = Dyadic::one();
    let mut sum = Dyadic::one();
    let mut i: i64 = 1;
    loop {
        t = t.mul(&x, wi, dir).div(&Dyadic::from_int(i), wi, dir);
        sum = sum.add(&t, wi, dir);
        i += 1;
        if t < stop {
            break;
        }
    }
    if dir == Up {
        // remaining terms are dominated by a geometric series with ratio <= 1/2
        sum = sum.add(&t.shl(1), wi, Up);
    }
    for _ in 0..s {
        sum = sum.mul(&sum, wi, dir);
    }
    sum.round(w, dir)
}

const EXP_ARG_LIMIT: f64 = 1.0e12;

/// Enclosure of `e^x` for a dyadic point.
pub fn exp_point(x: &Dyadic, prec: u32) -> Interval {
    if x.is_zero() {
        return Interval::one();
    }
    let xf = x.to_f64();
    if xf < -EXP_ARG_LIMIT {
        let cap = exp_point(&Dyadic::from_f64(-EXP_ARG_LIMIT).expect("finite"), prec);
        return Interval {
            lo: Dyadic::zero(),
            hi: cap.hi,
        };
    }
    assert!(xf <= EXP_ARG_LIMIT, "exp argument {xf} too large");
    let k = (xf / std::f64::consts::LN_2).round() as i64;
    let w = prec + 24 + guard_bits(k) + x.msb().unwrap_or(0).max(0) as u32;
    let l2 = ln2(w + guard_bits(k));
    let r = Interval::point(x.clone()).sub(&l2.mul_int(k, w), w);
    let lo = exp_signed(&r.lo, w, Down);
    let hi = exp_signed(&r.hi, w, Up);
    Interval {
        lo: lo.shl(k).round(prec, Down),
        hi: hi.shl(k).round(prec, Up),
    }
}

fn exp_signed(y: &Dyadic, w: u32, dir: Rounding) -> Dyadic {
    if y.is_negative() {
        let e = exp_small(&y.neg(), w + 4, dir.flip());
        Dyadic::one().div(&e, w, dir)
    } else {
        exp_small(y, w, dir)
    }
}

/// Enclosure of `ln x` for a positive dyadic point.
pub fn ln_point(x: &Dyadic, prec: u32) -> Interval {
    assert!(x.is_positive(), "ln of a nonpositive value");
    let mut e = x.msb().unwrap_or(0);
    let mut m = x.shl(-e);
    // m in [1,2); move to [2/3, 4/3]
    if m.mul_exact(&Dyadic::from_int(3)) > Dyadic::from_int(4) {
        m = m.shl(-1);
        e += 1;
    }
    let w = prec + 16 + guard_bits(e);
    let num = m.sub_exact(&Dyadic::one());
    let den = m.add_exact(&Dyadic::one());
    let zl = num.div(&den, w, Down);
    let zh = num.div(&den, w, Up);
    let lm = Interval {
        lo: atanh_series(&zl, w, Down).shl(1),
        hi: atanh_series(&zh, w, Up).shl(1),
    };
    let r = if e == 0 {
        lm
    } else {
        lm.add(&ln2(w + guard_bits(e)).mul_int(e, w), w)
    };
    r.round(prec)
}

/// `ln n` for a positive integer.
pub fn ln_int(n: &BigInt, prec: u32) -> Interval {
    ln_point(&Dyadic::from_int(n.clone()), prec)
}

/// Integer `floor` and `ceil` candidates of an interval.
pub fn floor_ceil(x: &Interval) -> (BigInt, BigInt) {
    (x.lo.floor(), x.hi.ceil())
}

/// Enclosure of `e^x` for a rational input.
pub fn exp_rational(x: &BigRational, prec: u32) -> Interval {
    Interval::from_rational(x, prec + 32).exp(prec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    fn encloses(x: &Interval, v: f64, tol: f64) -> bool {
        x.lower_f64() <= v + tol && v - tol <= x.upper_f64()
    }

    #[test]
    fn ln2_matches_reference() {
        let l = ln2(128);
        assert!(
            l.contains_f64(std::f64::consts::LN_2) || encloses(&l, std::f64::consts::LN_2, 1e-16)
        );
        assert!(l.width() <= Dyadic::pow2(-120));
        let l2 = ln2(256);
        assert!(l2.is_subset_of(&l) || l2.intersects(&l));
    }

    #[test]
    fn exp_and_ln_invert() {
        for x in [-30.5, -1.0, -1e-9, 0.3, 1.0, 2.5, 700.0] {
            let e = exp_point(&Dyadic::from_f64(x).unwrap(), 96);
            let back = e.ln(96).unwrap();
            assert!(back.contains_f64(x), "x={x} back={back}");
            assert!(encloses(&e, x.exp(), x.exp() * 1e-14));
        }
    }

    #[test]
    fn exp_huge_negative_is_tiny() {
        let e = exp_point(&Dyadic::from_int(-5000), 64);
        assert!(e.lo().is_positive());
        assert!(e.hi() < &Dyadic::pow2(-7000));
        let l = e.ln(64).unwrap();
        assert!(l.contains_f64(-5000.0));
    }

    #[test]
    fn ln_of_integers() {
        let l3 = ln_int(&BigInt::from(3), 80);
        assert!(encloses(&l3, 3f64.ln(), 1e-15));
        let big = BigInt::one() << 100_000u32;
        let lb = ln_int(&big, 64);
        assert!(lb.contains_f64(100_000.0 * std::f64::consts::LN_2) || lb.rel_width() < 1e-15);
    }

    #[test]
    fn pow_and_sqrt() {
        let two = Interval::from_int(2);
        let cube_root = two.pow(&Interval::from_ratio(-1, 3, 96), 80).unwrap();
        assert!(encloses(&cube_root, 2f64.powf(-1.0 / 3.0), 1e-15));
        let s = two.sqrt(80).unwrap();
        assert!(encloses(&s, 2f64.sqrt(), 1e-15));
        assert_eq!(
            Interval::from_int(-3).powi(2, 32).unwrap(),
            Interval::from_int(9)
        );
    }

    #[test]
    fn division_signs() {
        let a = Interval::from_int(1);
        let b = Interval::from_int(-3);
        let q = a.div(&b, 64).unwrap();
        assert!(q.contains_rational(&BigRational::new((-1).into(), 3.into())));
        assert!(a
            .div(&Interval::new(Dyadic::from_int(-1), Dyadic::one()), 64)
            .is_none());
    }
}
