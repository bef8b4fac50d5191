//! Recursive integer sequences driving the shear-level and record-level constructions.
//!
//! Every "smallest integer such that" is found by solving a real relaxation, then walking
//! to the exact answer with enclosure-decided comparisons. Each row stores the result of
//! re-checking its defining inequality at the chosen integer and at the integer below it.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize, Serializer};

use super::epsilon::MAX_DECISION_PRECISION;
use crate::error::{Error, Result};
use crate::real::serde_dyadic::{ser_display, ser_interval};
use crate::real::{ln2, ln_int, Dyadic, Interval};

/// Default cap on the bit length of any sequence entry.
pub const DEFAULT_MAX_BITS: u64 = 1 << 20;

/// How far the search may move from the relaxed root before giving up.
const MAX_SEARCH_STEPS: u32 = 256;

/// Beyond this index `2^{1−i}` is replaced by the bound `[0, 2^{-LOG_TINY}]`.
const LOG_TINY: i64 = 1 << 30;

/// A real parameter: either an exact rational, re-enclosed at whatever precision a
/// comparison needs, or a fixed enclosure.
#[derive(Clone, Debug, PartialEq)]
pub enum RealParam {
    Exact(BigRational),
    Enclosure(Interval),
}

impl RealParam {
    pub fn from_f64(x: f64) -> Self {
        RealParam::Exact(BigRational::from_float(x).expect("finite parameter"))
    }

    pub fn at(&self, w: u32) -> Interval {
        match self {
            RealParam::Exact(q) => Interval::from_rational(q, w),
            RealParam::Enclosure(x) => x.clone(),
        }
    }

    fn lower_positive(&self) -> bool {
        self.at(64).lo().is_positive()
    }

    fn lower_negative(&self) -> bool {
        self.at(64).lo().is_negative()
    }
}

impl Serialize for RealParam {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            RealParam::Exact(q) => s.serialize_str(&q.to_string()),
            RealParam::Enclosure(x) => ser_interval(x, s),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceKind {
    /// Rows `(j, i_j, a_j)`: dyadic levels and escape thresholds.
    EscapeThresholds,
    /// Rows `(j, l_j, i_j)`: record levels and dyadic levels.
    RecordLevels,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonMode {
    PaperFaithful,
    Empirical,
}

/// Outcome of evaluating a defining inequality one below the chosen integer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Decrement {
    /// The inequality is false there.
    Fails,
    /// The integer below is outside the admissible range.
    BelowConstraint,
    /// The value is fixed by the construction, not searched.
    Seed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Check {
    pub holds: bool,
    pub decrement: Decrement,
}

impl Check {
    fn seed() -> Self {
        Check {
            holds: true,
            decrement: Decrement::Seed,
        }
    }

    pub fn ok(&self) -> bool {
        self.holds
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SequenceRow {
    pub j: u64,
    #[serde(serialize_with = "ser_display")]
    pub i: BigInt,
    /// `a_j` for escape thresholds, `l_j` for record levels.
    #[serde(serialize_with = "ser_display")]
    pub value: BigInt,
    pub i_check: Check,
    pub value_check: Check,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SequenceParams {
    EscapeThresholds {
        p: f64,
        p_prime: f64,
        m: RealParam,
        m_prime: RealParam,
        eps: RealParam,
        mode: EpsilonMode,
    },
    RecordLevels {
        m: RealParam,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct SequenceTable {
    pub kind: SequenceKind,
    pub params: SequenceParams,
    pub rows: Vec<SequenceRow>,
    /// Set when an entry would exceed the bit cap; rows computed so far are kept.
    pub truncated: bool,
    pub warnings: Vec<String>,
}

impl SequenceTable {
    /// Every row's inequalities hold and every searched integer is minimal.
    pub fn all_verified(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.i_check.ok() && r.value_check.ok())
    }

    /// Indices strictly increasing and values nondecreasing.
    pub fn is_monotone(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[0].i < w[1].i && w[0].value <= w[1].value)
    }
}

/// A comparison outcome, or the width of the undecided difference.
enum Cmp {
    Decided(bool),
    Open(Dyadic),
}

/// Repeats `f` at doubling precision until it decides, giving up early once extra
/// precision stops narrowing the comparison (the inputs themselves are too wide).
fn decide(w0: u32, mut f: impl FnMut(u32) -> Option<Cmp>) -> Result<bool> {
    let mut w = w0.max(64);
    let mut last: Option<Dyadic> = None;
    loop {
        match f(w) {
            Some(Cmp::Decided(b)) => return Ok(b),
            Some(Cmp::Open(width)) => {
                if let Some(prev) = &last {
                    if width.shl(1) > *prev {
                        return Err(Error::PrecisionUnreachable(w));
                    }
                }
                last = Some(width);
            }
            None => {}
        }
        if w >= MAX_DECISION_PRECISION {
            return Err(Error::PrecisionUnreachable(w));
        }
        w = (w * 2).min(MAX_DECISION_PRECISION);
    }
}

fn compare_le(lhs: &Interval, rhs: &Interval) -> Option<Cmp> {
    Some(if lhs.certainly_le(rhs) {
        Cmp::Decided(true)
    } else if lhs.certainly_gt(rhs) {
        Cmp::Decided(false)
    } else {
        Cmp::Open(lhs.width().add_exact(&rhs.width()))
    })
}

fn bits(x: &BigInt) -> u32 {
    x.bits().min(u32::MAX as u64 / 4) as u32
}

/// Smallest `x ≥ lb` with `holds(x)`, for a predicate monotone in `x`, starting near `start`.
fn smallest_from(
    start: BigInt,
    lb: &BigInt,
    mut holds: impl FnMut(&BigInt) -> Result<bool>,
) -> Result<BigInt> {
    let mut x = start.max(lb.clone());
    if holds(&x)? {
        let mut steps = 0;
        while &x > lb && holds(&(&x - 1))? {
            x -= 1;
            steps += 1;
            if steps > MAX_SEARCH_STEPS {
                return Err(Error::invalid(
                    "relaxed root too far above the exact answer",
                ));
            }
        }
    } else {
        let mut steps = 0;
        loop {
            x += 1;
            if holds(&x)? {
                break;
            }
            steps += 1;
            if steps > MAX_SEARCH_STEPS {
                return Err(Error::invalid(
                    "relaxed root too far below the exact answer",
                ));
            }
        }
    }
    Ok(x)
}

fn check_at(
    x: &BigInt,
    lb: &BigInt,
    mut holds: impl FnMut(&BigInt) -> Result<bool>,
) -> Result<Check> {
    let ok = holds(x)?;
    let below = x - 1;
    let decrement = if &below < lb {
        Decrement::BelowConstraint
    } else if holds(&below)? {
        // not minimal: report as a failed check
        return Ok(Check {
            holds: false,
            decrement: Decrement::Fails,
        });
    } else {
        Decrement::Fails
    };
    Ok(Check {
        holds: ok,
        decrement,
    })
}

/// Enclosure of `ln(1 + 2^{1−i})` for `i ≥ 1`.
fn log1p_pow2(i: &BigInt) -> Interval {
    match (i - BigInt::one()).to_i64() {
        Some(e) if e < LOG_TINY => {
            let x = Dyadic::pow2(-e);
            let x2h = Dyadic::pow2(-2 * e - 1);
            Interval::new(x.sub_exact(&x2h), x)
        }
        _ => Interval::new(Dyadic::zero(), Dyadic::pow2(-LOG_TINY)),
    }
}

fn floor_lo(x: &Interval) -> BigInt {
    x.lo().floor()
}

fn int(x: &BigInt) -> Interval {
    Interval::from_int(x.clone())
}

/// `x^{1/p'}` for positive `x`, exactly by repeated squaring when `1/p'` is a small integer.
fn root_power(x: &Interval, p_prime: f64, w: u32) -> Option<Interval> {
    let inv = 1.0 / p_prime;
    if inv == inv.trunc() && inv <= 64.0 && p_prime == 1.0 / inv {
        x.powi(inv as i64, w)
    } else {
        let l = x.ln(w + 16)?;
        Some(l.div(&Interval::from_f64(p_prime), w + 16)?.exp(w))
    }
}

/// `a^{q}` for a positive integer `a` and real `q > 0`.
fn int_power(a: &BigInt, q: f64, w: u32) -> Interval {
    if q == q.trunc() && q <= 64.0 {
        Interval::from_int(a.pow(q as u32))
    } else {
        ln_int(a, w + 16).mul(&Interval::from_f64(q), w + 16).exp(w)
    }
}

struct Thresholds<'a> {
    p: f64,
    p_prime: f64,
    m: &'a RealParam,
    m_prime: &'a RealParam,
    eps: &'a RealParam,
}

impl Thresholds<'_> {
    /// `4M/ε + 2 i log 2`.
    fn c(&self, i: &BigInt, w: u32) -> Interval {
        let a = self
            .m
            .at(w)
            .mul_int(4, w)
            .div(&self.eps.at(w), w)
            .expect("eps > 0");
        a.add(&ln2(w + bits(i) + 8).mul(&int(i), w).mul_int(2, w), w)
    }

    /// `a^p ≥ C a`, i.e. `a^{p−1} ≥ C`.
    fn a_holds(&self, i: &BigInt, a: &BigInt) -> Result<bool> {
        if !a.is_positive() {
            return Ok(false);
        }
        let w0 = 64 + bits(i) + (bits(a) as f64 * self.p).ceil() as u32;
        decide(w0, |w| {
            let lhs = int_power(a, self.p - 1.0, w);
            compare_le(&self.c(i, w), &lhs)
        })
    }

    /// `(4a(M'+1)/ε)^{1/p'}`.
    fn x(&self, a: &BigInt, w: u32) -> Interval {
        let y = self
            .m_prime
            .at(w)
            .add(&Interval::one(), w)
            .mul(&int(a), w)
            .mul_int(4, w)
            .div(&self.eps.at(w), w)
            .expect("eps > 0");
        root_power(&y, self.p_prime, w).expect("positive base")
    }

    /// Log of the left side of the level inequality, compared to 0.
    fn i_holds(&self, a: &BigInt, i: &BigInt) -> Result<bool> {
        let w0 = 64 + 2 * bits(i) + bits(a);
        decide(w0, |w| {
            let l2 = ln2(w + bits(i) + 8);
            let two_a = int(&(a * 2));
            let g = l2
                .mul(&int(&(BigInt::one() - i)), w)
                .add(&two_a.ln(w)?, w)
                .add(&two_a.mul(&log1p_pow2(i), w), w)
                .add(&self.x(a, w), w);
            compare_le(&g, &Interval::zero())
        })
    }

    fn a_start(&self, i: &BigInt) -> Result<BigInt> {
        let mut w = 64 + 2 * bits(i);
        loop {
            let c = self.c(i, w);
            let l = c
                .ln(w)
                .ok_or_else(|| Error::invalid("threshold constant must be positive"))?;
            let r = l
                .div(&Interval::from_f64(self.p - 1.0), w)
                .expect("p > 1")
                .exp(w);
            let br = r.hi().msb().unwrap_or(0).max(0) as u32;
            if br + 32 <= w {
                return Ok(floor_lo(&r) - 2);
            }
            w = br + 64;
        }
    }

    fn i_start(&self, a: &BigInt) -> BigInt {
        let mut w = 64 + bits(a);
        loop {
            let x = self.x(a, w);
            let bx = x.hi().msb().unwrap_or(0).max(0) as u32;
            if bx + 64 <= w {
                let l2 = ln2(w);
                let r = int(&(a * 2))
                    .ln(w)
                    .expect("positive")
                    .add(&x, w)
                    .div(&l2, w)
                    .expect("ln 2 > 0");
                return floor_lo(&r) + 1 - 2;
            }
            w = bx + 96;
        }
    }
}

fn check_params(
    p: f64,
    p_prime: f64,
    eps: &RealParam,
    m: &RealParam,
    m_prime: &RealParam,
) -> Result<Vec<String>> {
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::invalid("p must be > 1"));
    }
    if !(p_prime > 0.0 && p_prime < 1.0) {
        return Err(Error::invalid("p' must lie in (0, 1)"));
    }
    if !eps.lower_positive() {
        return Err(Error::invalid("eps must be positive"));
    }
    if m.lower_negative() || m_prime.lower_negative() {
        return Err(Error::invalid("moment constants must be nonnegative"));
    }
    let mut warnings = Vec::new();
    if p * p_prime >= 1.0 {
        warnings.push(format!(
            "p*p' = {} is outside the admissible range p*p' < 1",
            p * p_prime
        ));
    }
    Ok(warnings)
}

/// Rows `(j, i_j, a_j)` for `j = 1..=j_max`, seeded with `i_1 = 1`.
///
/// `a_j` is the least positive integer with `a_j^p ≥ (4M/ε + 2 i_j log 2) a_j`, and
/// `i_{j+1}` the least integer `≥ i_j + 1` with
/// `2^{1−i} 2a_j (1 + 2^{1−i})^{2a_j} exp((4a_j(M'+1)/ε)^{1/p'}) ≤ 1`.
#[allow(clippy::too_many_arguments)]
pub fn escape_threshold_sequences(
    p: f64,
    p_prime: f64,
    m: &RealParam,
    m_prime: &RealParam,
    eps: &RealParam,
    mode: EpsilonMode,
    j_max: u64,
    max_bits: u64,
) -> Result<SequenceTable> {
    if j_max == 0 {
        return Err(Error::invalid("j_max must be at least 1"));
    }
    let warnings = check_params(p, p_prime, eps, m, m_prime)?;
    let t = Thresholds {
        p,
        p_prime,
        m,
        m_prime,
        eps,
    };
    let one = BigInt::one();
    let mut rows: Vec<SequenceRow> = Vec::new();
    let mut i = BigInt::one();
    let mut i_check = Check::seed();
    let mut truncated = false;
    for j in 1..=j_max {
        let a = smallest_from(t.a_start(&i)?, &one, |a| t.a_holds(&i, a))?;
        let value_check = check_at(&a, &one, |a| t.a_holds(&i, a))?;
        rows.push(SequenceRow {
            j,
            i: i.clone(),
            value: a.clone(),
            i_check,
            value_check,
        });
        if j == j_max {
            break;
        }
        let lb = &i + 1;
        let start = t.i_start(&a);
        if start.bits() > max_bits {
            truncated = true;
            break;
        }
        let next = smallest_from(start, &lb, |x| t.i_holds(&a, x))?;
        i_check = check_at(&next, &lb, |x| t.i_holds(&a, x))?;
        i = next;
    }
    Ok(SequenceTable {
        kind: SequenceKind::EscapeThresholds,
        params: SequenceParams::EscapeThresholds {
            p,
            p_prime,
            m: m.clone(),
            m_prime: m_prime.clone(),
            eps: eps.clone(),
            mode,
        },
        rows,
        truncated,
        warnings,
    })
}

struct Levels<'a> {
    m: &'a RealParam,
}

impl Levels<'_> {
    /// `j (i log 2 + l log 2 + 2M)`.
    fn level_target(&self, j: u64, i: &BigInt, l: &BigInt, w: u32) -> Interval {
        let s = i + l;
        ln2(w + bits(&s) + 8)
            .mul(&int(&s), w)
            .add(&self.m.at(w).mul_int(2, w), w)
            .mul(&Interval::from_int(j), w)
    }

    fn level_holds(&self, j: u64, i: &BigInt, l: &BigInt, cand: &BigInt) -> Result<bool> {
        let w0 = 64 + bits(i) + bits(l);
        decide(w0, |w| {
            compare_le(&self.level_target(j, i, l, w), &int(cand))
        })
    }

    /// `(1−i) log 2 + log j + j log(1 + 2^{1−i}) + log 2 + (2M + l log 2 + 1) j ≤ 0`.
    fn i_holds(&self, j: u64, l_next: &BigInt, i: &BigInt) -> Result<bool> {
        let w0 = 64 + bits(i) + bits(l_next);
        decide(w0, |w| {
            let l2 = ln2(w + bits(i) + bits(l_next) + 8);
            let jj = Interval::from_int(j);
            let inner = self
                .m
                .at(w)
                .mul_int(2, w)
                .add(&l2.mul(&int(l_next), w), w)
                .add(&Interval::one(), w)
                .mul(&jj, w);
            let g = l2
                .mul(&int(&(BigInt::one() - i)), w)
                .add(&jj.ln(w)?, w)
                .add(&jj.mul(&log1p_pow2(i), w), w)
                .add(&l2, w)
                .add(&inner, w);
            compare_le(&g, &Interval::zero())
        })
    }

    fn i_start(&self, j: u64, l_next: &BigInt) -> BigInt {
        let w = 64 + bits(l_next);
        let l2 = ln2(w);
        let jj = Interval::from_int(j);
        let inner = self
            .m
            .at(w)
            .mul_int(2, w)
            .add(&l2.mul(&int(l_next), w), w)
            .add(&Interval::one(), w)
            .mul(&jj, w);
        let r = jj
            .ln(w)
            .expect("j >= 1")
            .add(&l2, w)
            .add(&inner, w)
            .div(&l2, w)
            .expect("ln 2 > 0");
        floor_lo(&r) + 1 - 2
    }
}

/// Rows `(j, l_j, i_j)` for `j = 1..=j_max`, seeded with `l_1 = i_1 = 1`.
///
/// `l_{j+1} = ⌈j (i_j log 2 + l_j log 2 + 2M)⌉` and `i_{j+1}` is the least integer
/// `≥ max{l_j, i_j + 1}` with `2^{1−i} j (1 + 2^{1−i})^j 2 exp((2M + l_{j+1} log 2 + 1) j) ≤ 1`.
pub fn record_level_sequences(m: &RealParam, j_max: u64, max_bits: u64) -> Result<SequenceTable> {
    if j_max == 0 {
        return Err(Error::invalid("j_max must be at least 1"));
    }
    if m.lower_negative() {
        return Err(Error::invalid("M must be nonnegative"));
    }
    let lv = Levels { m };
    let mut rows = Vec::new();
    let (mut l, mut i) = (BigInt::one(), BigInt::one());
    let (mut l_check, mut i_check) = (Check::seed(), Check::seed());
    let mut truncated = false;
    let mut warnings = Vec::new();
    for j in 1..=j_max {
        if l > i {
            warnings.push(format!("row {j}: l_j > i_j"));
        }
        rows.push(SequenceRow {
            j,
            i: i.clone(),
            value: l.clone(),
            i_check,
            value_check: l_check,
        });
        if j == j_max {
            break;
        }
        let target_w = 64 + bits(&i) + bits(&l);
        let guess = lv.level_target(j, &i, &l, target_w).hi().ceil();
        if guess.bits() > max_bits {
            truncated = true;
            break;
        }
        let zero = BigInt::zero();
        let l_next = smallest_from(guess - 2, &zero, |c| lv.level_holds(j, &i, &l, c))?;
        l_check = check_at(&l_next, &zero, |c| lv.level_holds(j, &i, &l, c))?;
        let lb: BigInt = (&i + BigInt::one()).max(l.clone());
        let i_next = smallest_from(lv.i_start(j, &l_next), &lb, |x| lv.i_holds(j, &l_next, x))?;
        i_check = check_at(&i_next, &lb, |x| lv.i_holds(j, &l_next, x))?;
        l = l_next;
        i = i_next;
    }
    Ok(SequenceTable {
        kind: SequenceKind::RecordLevels,
        params: SequenceParams::RecordLevels { m: m.clone() },
        rows,
        truncated,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratmat::rat;

    fn toy() -> SequenceTable {
        let one = RealParam::from_f64(1.0);
        let eps = RealParam::Exact(rat(1, 20));
        escape_threshold_sequences(
            2.0,
            0.5,
            &one,
            &one,
            &eps,
            EpsilonMode::Empirical,
            5,
            DEFAULT_MAX_BITS,
        )
        .unwrap()
    }

    #[test]
    fn toy_thresholds() {
        let t = toy();
        assert_eq!(t.rows[0].value, BigInt::from(82));
        assert_eq!(t.rows[0].i, BigInt::one());
        assert_eq!(t.rows.len(), 5);
        assert!(t.all_verified(), "{t:?}");
        assert!(t.is_monotone());
        assert_eq!(t.warnings.len(), 1);
    }

    #[test]
    fn record_levels_with_unit_mean() {
        let t = record_level_sequences(&RealParam::from_f64(1.0), 5, DEFAULT_MAX_BITS).unwrap();
        assert_eq!(t.rows[1].value, BigInt::from(4));
        assert_eq!(t.rows[1].i, BigInt::from(11));
        assert_eq!(t.rows[2].value, BigInt::from(25));
        assert_eq!(t.rows[2].i, BigInt::from(62));
        assert!(t.all_verified());
        assert!(t.rows.iter().all(|r| r.value <= r.i));
    }

    #[test]
    fn bit_cap_truncates() {
        let one = RealParam::from_f64(1.0);
        let eps = RealParam::Exact(rat(1, 20));
        let t =
            escape_threshold_sequences(2.0, 0.5, &one, &one, &eps, EpsilonMode::Empirical, 8, 64)
                .unwrap();
        assert!(t.truncated);
        assert!(t.rows.len() < 8);
    }
}
