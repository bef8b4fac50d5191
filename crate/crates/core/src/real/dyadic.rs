use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Direction of a rounding step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rounding {
    Down,
    Up,
}

impl Rounding {
    pub fn flip(self) -> Self {
        match self {
            Rounding::Down => Rounding::Up,
            Rounding::Up => Rounding::Down,
        }
    }
}

/// An exact binary fraction `mant * 2^exp`, kept normalized (odd mantissa, or zero with `exp = 0`).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Dyadic {
    mant: BigInt,
    exp: i64,
}

fn shr_floor(m: &BigInt, s: u64) -> BigInt {
    if s == 0 {
        return m.clone();
    }
    if m.sign() != Sign::Minus {
        m >> s
    } else {
        let mask = (BigInt::one() << s) - 1u32;
        -(((-m) + mask) >> s)
    }
}

fn shr_ceil(m: &BigInt, s: u64) -> BigInt {
    -shr_floor(&-m, s)
}

fn pow2_f64(e: i64) -> f64 {
    debug_assert!((-1074..=1023).contains(&e));
    if e >= -1022 {
        f64::from_bits(((e + 1023) as u64) << 52)
    } else {
        f64::from_bits(1u64 << (e + 1074))
    }
}

impl Dyadic {
    pub fn new(mant: BigInt, exp: i64) -> Self {
        if mant.is_zero() {
            return Dyadic { mant, exp: 0 };
        }
        let tz = mant.trailing_zeros().unwrap_or(0);
        if tz > 0 {
            Dyadic {
                mant: mant >> tz,
                exp: exp + tz as i64,
            }
        } else {
            Dyadic { mant, exp }
        }
    }

    pub fn zero() -> Self {
        Dyadic {
            mant: BigInt::zero(),
            exp: 0,
        }
    }

    pub fn one() -> Self {
        Dyadic {
            mant: BigInt::one(),
            exp: 0,
        }
    }

    pub fn from_int(n: impl Into<BigInt>) -> Self {
        Dyadic::new(n.into(), 0)
    }

    /// `2^e`.
    pub fn pow2(e: i64) -> Self {
        Dyadic {
            mant: BigInt::one(),
            exp: e,
        }
    }

    /// Exact conversion; `None` for NaN and infinities.
    pub fn from_f64(x: f64) -> Option<Self> {
        if !x.is_finite() {
            return None;
        }
        if x == 0.0 {
            return Some(Dyadic::zero());
        }
        let bits = x.to_bits();
        let sign = if bits >> 63 == 1 { -1i64 } else { 1 };
        let raw_exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, e) = if raw_exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), raw_exp - 1075)
        };
        Some(Dyadic::new(BigInt::from(m) * sign, e))
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mant
    }

    pub fn exponent(&self) -> i64 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.mant.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.mant.is_positive()
    }

    pub fn bit_len(&self) -> u64 {
        self.mant.bits()
    }

    /// `floor(log2 |x|)`, `None` for zero.
    pub fn msb(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.exp + self.mant.bits() as i64 - 1)
        }
    }

    pub fn neg(&self) -> Self {
        Dyadic {
            mant: -&self.mant,
            exp: self.exp,
        }
    }

    pub fn abs(&self) -> Self {
        Dyadic {
            mant: self.mant.abs(),
            exp: self.exp,
        }
    }

    /// Multiplication by `2^k`, exact.
    pub fn shl(&self, k: i64) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        Dyadic {
            mant: self.mant.clone(),
            exp: self.exp + k,
        }
    }

    pub fn mul_exact(&self, o: &Self) -> Self {
        Dyadic::new(&self.mant * &o.mant, self.exp + o.exp)
    }

    pub fn add_exact(&self, o: &Self) -> Self {
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        let e = self.exp.min(o.exp);
        let a = &self.mant << (self.exp - e) as u64;
        let b = &o.mant << (o.exp - e) as u64;
        Dyadic::new(a + b, e)
    }

    pub fn sub_exact(&self, o: &Self) -> Self {
        self.add_exact(&o.neg())
    }

    /// Round to at most `prec` significant bits in direction `dir`.
    pub fn round(&self, prec: u32, dir: Rounding) -> Self {
        let bits = self.mant.bits();
        let prec = prec.max(2) as u64;
        if bits <= prec {
            return self.clone();
        }
        let shift = bits - prec;
        let m = match dir {
            Rounding::Down => shr_floor(&self.mant, shift),
            Rounding::Up => shr_ceil(&self.mant, shift),
        };
        Dyadic::new(m, self.exp + shift as i64)
    }

    /// Directed sum. Operands far below the result's last place are replaced by a
    /// same-signed proxy of one quarter ulp so huge exponent gaps never get materialized.
    pub fn add(&self, o: &Self, prec: u32, dir: Rounding) -> Self {
        if self.is_zero() {
            return o.round(prec, dir);
        }
        if o.is_zero() {
            return self.round(prec, dir);
        }
        let (big, small) = if self.msb() >= o.msb() {
            (self, o)
        } else {
            (o, self)
        };
        let mb = big.msb().unwrap_or(0);
        let ms = small.msb().unwrap_or(0);
        let cutoff = mb - prec as i64 - 2;
        if ms < cutoff - 1 {
            let droppable = small.is_positive() != (dir == Rounding::Up);
            if droppable {
                return big.round(prec, dir);
            }
            let proxy = if small.is_positive() {
                Dyadic::pow2(cutoff)
            } else {
                Dyadic::pow2(cutoff).neg()
            };
            return big.add_exact(&proxy).round(prec, dir);
        }
        big.add_exact(small).round(prec, dir)
    }

    pub fn sub(&self, o: &Self, prec: u32, dir: Rounding) -> Self {
        self.add(&o.neg(), prec, dir)
    }

    pub fn mul(&self, o: &Self, prec: u32, dir: Rounding) -> Self {
        self.mul_exact(o).round(prec, dir)
    }

    /// Directed quotient; panics on a zero divisor.
    pub fn div(&self, o: &Self, prec: u32, dir: Rounding) -> Self {
        assert!(!o.is_zero(), "dyadic division by zero");
        if self.is_zero() {
            return Dyadic::zero();
        }
        let want = prec as i64 + 2 + o.mant.bits() as i64 - self.mant.bits() as i64;
        let s = want.max(0) as u64;
        let num = &self.mant << s;
        let q = match dir {
            Rounding::Down => num.div_floor(&o.mant),
            Rounding::Up => -((-num).div_floor(&o.mant)),
        };
        Dyadic::new(q, self.exp - o.exp - s as i64).round(prec, dir)
    }

    /// Directed square root of a nonnegative value.
    pub fn sqrt(&self, prec: u32, dir: Rounding) -> Self {
        assert!(!self.is_negative(), "square root of a negative dyadic");
        if self.is_zero() {
            return Dyadic::zero();
        }
        let bits = self.mant.bits() as i64;
        let mut s = (2 * prec as i64 + 4 - bits).max(0);
        if (self.exp - s).rem_euclid(2) != 0 {
            s += 1;
        }
        let m: BigUint = (&self.mant << s as u64).to_biguint().expect("nonnegative");
        let mut r = m.sqrt();
        if dir == Rounding::Up && &r * &r != m {
            r += 1u32;
        }
        Dyadic::new(BigInt::from(r), (self.exp - s) / 2).round(prec, dir)
    }

    pub fn from_ratio(num: &BigInt, den: &BigInt, prec: u32, dir: Rounding) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        let (num, den) = if den.is_negative() {
            (-num, -den)
        } else {
            (num.clone(), den.clone())
        };
        // exact when the denominator is a power of two
        if let Some(tz) = den.trailing_zeros() {
            if den == (BigInt::one() << tz) {
                return Dyadic::new(num, -(tz as i64)).round(prec, dir);
            }
        }
        Dyadic::from_int(num).div(&Dyadic::from_int(den), prec, dir)
    }

    pub fn from_rational(q: &BigRational, prec: u32, dir: Rounding) -> Self {
        Dyadic::from_ratio(q.numer(), q.denom(), prec, dir)
    }

    pub fn to_rational(&self) -> BigRational {
        if self.exp >= 0 {
            BigRational::from_integer(&self.mant << self.exp as u64)
        } else {
            BigRational::new(self.mant.clone(), BigInt::one() << (-self.exp) as u64)
        }
    }

    /// Exact comparison against a rational.
    pub fn cmp_rational(&self, q: &BigRational) -> Ordering {
        let (n, d) = (q.numer(), q.denom());
        if self.exp >= 0 {
            ((&self.mant << self.exp as u64) * d).cmp(n)
        } else {
            (&self.mant * d).cmp(&(n << (-self.exp) as u64))
        }
    }

    pub fn floor(&self) -> BigInt {
        if self.exp >= 0 {
            &self.mant << self.exp as u64
        } else {
            shr_floor(&self.mant, (-self.exp) as u64)
        }
    }

    pub fn ceil(&self) -> BigInt {
        if self.exp >= 0 {
            &self.mant << self.exp as u64
        } else {
            shr_ceil(&self.mant, (-self.exp) as u64)
        }
    }

    /// Directed conversion to `f64`, saturating to infinities or zero where needed.
    pub fn to_f64_dir(&self, dir: Rounding) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let r = self.round(53, dir);
        let msb = r.msb().unwrap_or(0);
        let pos = r.is_positive();
        if msb > 1023 {
            return match (pos, dir) {
                (true, Rounding::Down) => f64::MAX,
                (true, Rounding::Up) => f64::INFINITY,
                (false, Rounding::Down) => f64::NEG_INFINITY,
                (false, Rounding::Up) => -f64::MAX,
            };
        }
        if msb < -1022 {
            // subnormal range: round onto the grid of multiples of 2^-1074
            let scaled = self.shl(1074);
            let k = match dir {
                Rounding::Down => scaled.floor(),
                Rounding::Up => scaled.ceil(),
            };
            return k.to_f64().expect("below 2^53") * pow2_f64(-1074);
        }
        let m = r.mant.to_f64().expect("53-bit mantissa");
        m * pow2_f64(r.exp)
    }

    /// Nearest-ish conversion for display and estimates.
    pub fn to_f64(&self) -> f64 {
        let lo = self.to_f64_dir(Rounding::Down);
        let hi = self.to_f64_dir(Rounding::Up);
        if lo.is_finite() && hi.is_finite() {
            lo + (hi - lo) / 2.0
        } else if lo.is_finite() {
            lo
        } else {
            hi
        }
    }

    /// Scientific decimal rendering with `digits` significant digits, rounded in `dir`.
    pub fn to_decimal_dir(&self, digits: usize, dir: Rounding) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let digits = digits.max(1) as i64;
        let msb = self.msb().unwrap_or(0);
        let mut k = ((msb as f64) * std::f64::consts::LOG10_2).floor() as i64;
        let ten = BigInt::from(10u32);
        loop {
            let s = digits - 1 - k;
            let mut num = self.mant.clone();
            let mut den = BigInt::one();
            if self.exp >= 0 {
                num <<= self.exp as u64;
            } else {
                den <<= (-self.exp) as u64;
            }
            if s >= 0 {
                num *= num_traits::pow(ten.clone(), s as usize);
            } else {
                den *= num_traits::pow(ten.clone(), (-s) as usize);
            }
            let q = match dir {
                Rounding::Down => num.div_floor(&den),
                Rounding::Up => -((-num).div_floor(&den)),
            };
            let qs = q.abs().to_string();
            let len = qs.len() as i64;
            if len > digits {
                if len == digits + 1 && qs[1..].bytes().all(|b| b == b'0') && qs.starts_with('1') {
                    // rounded up to the next power of ten
                    let sign = if q.is_negative() { "-" } else { "" };
                    return format!("{sign}1e{}", k + 1);
                }
                k += 1;
                continue;
            }
            if len < digits {
                k -= 1;
                continue;
            }
            let sign = if q.is_negative() { "-" } else { "" };
            let (head, tail) = qs.split_at(1);
            let tail = tail.trim_end_matches('0');
            return if tail.is_empty() {
                format!("{sign}{head}e{k}")
            } else {
                format!("{sign}{head}.{tail}e{k}")
            };
        }
    }

    /// Exact `mant*2^exp` rendering used for golden values.
    pub fn to_exact_string(&self) -> String {
        format!("{}*2^{}", self.mant, self.exp)
    }
}

impl Ord for Dyadic {
    fn cmp(&self, o: &Self) -> Ordering {
        let (sa, sb) = (self.mant.sign(), o.mant.sign());
        let rank = |s: Sign| match s {
            Sign::Minus => 0,
            Sign::NoSign => 1,
            Sign::Plus => 2,
        };
        if sa != sb {
            return rank(sa).cmp(&rank(sb));
        }
        if sa == Sign::NoSign {
            return Ordering::Equal;
        }
        let (ma, mb) = (self.msb().unwrap_or(0), o.msb().unwrap_or(0));
        if ma != mb {
            let by_mag = ma.cmp(&mb);
            return if sa == Sign::Plus {
                by_mag
            } else {
                by_mag.reverse()
            };
        }
        let e = self.exp.min(o.exp);
        let a = &self.mant << (self.exp - e) as u64;
        let b = &o.mant << (o.exp - e) as u64;
        a.cmp(&b)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal_dir(f.precision().unwrap_or(17), Rounding::Down))
    }
}

impl From<i64> for Dyadic {
    fn from(n: i64) -> Self {
        Dyadic::from_int(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(x: f64) -> Dyadic {
        Dyadic::from_f64(x).unwrap()
    }

    #[test]
    fn f64_roundtrip() {
        for x in [1.0, -3.5, 0.1, 1e-300, 5e-324, 1.7e308, -2.0f64.powi(-1030)] {
            let v = d(x);
            assert_eq!(v.to_f64_dir(Rounding::Down), x);
            assert_eq!(v.to_f64_dir(Rounding::Up), x);
        }
    }

    #[test]
    fn directed_division_brackets() {
        let one = Dyadic::one();
        let three = Dyadic::from_int(3);
        let lo = one.div(&three, 64, Rounding::Down);
        let hi = one.div(&three, 64, Rounding::Up);
        let third = BigRational::new(1.into(), 3.into());
        assert_eq!(lo.cmp_rational(&third), Ordering::Less);
        assert_eq!(hi.cmp_rational(&third), Ordering::Greater);
        assert!(hi.sub_exact(&lo) <= Dyadic::pow2(-64));
        let neg = one.neg().div(&three, 64, Rounding::Down);
        assert_eq!(neg.cmp_rational(&-third), Ordering::Less);
    }

    #[test]
    fn sqrt_exact_and_directed() {
        assert_eq!(d(16.0).sqrt(10, Rounding::Up), d(4.0));
        assert_eq!(Dyadic::pow2(-20).sqrt(8, Rounding::Down), Dyadic::pow2(-10));
        let lo = d(2.0).sqrt(80, Rounding::Down);
        let hi = d(2.0).sqrt(80, Rounding::Up);
        assert!(lo.mul_exact(&lo) < d(2.0));
        assert!(hi.mul_exact(&hi) > d(2.0));
    }

    #[test]
    fn gapped_addition_stays_directed() {
        let big = Dyadic::one();
        let tiny = Dyadic::pow2(-1_000_000);
        let up = big.add(&tiny, 64, Rounding::Up);
        let down = big.add(&tiny, 64, Rounding::Down);
        assert!(up > big);
        assert_eq!(down, big);
        let down_neg = big.add(&tiny.neg(), 64, Rounding::Down);
        assert!(down_neg < big);
        assert_eq!(big.add(&tiny.neg(), 64, Rounding::Up), big);
    }

    #[test]
    fn rounding_negative_values() {
        let x = Dyadic::from_int(-7); // -111b
        assert_eq!(x.round(2, Rounding::Down), Dyadic::from_int(-8));
        assert_eq!(x.round(2, Rounding::Up), Dyadic::from_int(-6));
        assert_eq!(d(-2.5).floor(), BigInt::from(-3));
        assert_eq!(d(-2.5).ceil(), BigInt::from(-2));
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(d(1.5).to_decimal_dir(5, Rounding::Down), "1.5e0");
        assert_eq!(d(0.0009765625).to_decimal_dir(3, Rounding::Down), "9.76e-4");
        assert_eq!(d(0.0009765625).to_decimal_dir(3, Rounding::Up), "9.77e-4");
        assert_eq!(d(-1024.0).to_decimal_dir(2, Rounding::Down), "-1.1e3");
        assert_eq!(d(999.5).to_decimal_dir(3, Rounding::Up), "1e3");
    }

    #[test]
    fn ordering_across_scales() {
        assert!(Dyadic::pow2(-5000) > Dyadic::zero());
        assert!(Dyadic::pow2(-5000).neg() > Dyadic::pow2(10).neg());
        assert!(d(3.0) > d(2.75));
        assert_eq!(
            d(0.5).cmp(&Dyadic::new(BigInt::from(4), -3)),
            Ordering::Equal
        );
    }
}
