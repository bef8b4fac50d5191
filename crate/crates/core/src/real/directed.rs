//! `f64` helpers with one-sided error bounds, for fast log-domain accumulators.
//!
//! Basic operations are correctly rounded, so one `next_up`/`next_down` step suffices.
//! `exp` and `ln` come from the platform libm; two steps cover its documented sub-ulp error.

pub fn add_up(a: f64, b: f64) -> f64 {
    let s = a + b;
    if s.is_finite() {
        s.next_up()
    } else {
        s
    }
}

pub fn add_down(a: f64, b: f64) -> f64 {
    let s = a + b;
    if s.is_finite() {
        s.next_down()
    } else {
        s
    }
}

pub fn sub_up(a: f64, b: f64) -> f64 {
    add_up(a, -b)
}

pub fn sub_down(a: f64, b: f64) -> f64 {
    add_down(a, -b)
}

pub fn mul_up(a: f64, b: f64) -> f64 {
    let s = a * b;
    if s.is_finite() {
        s.next_up()
    } else {
        s
    }
}

pub fn mul_down(a: f64, b: f64) -> f64 {
    let s = a * b;
    if s.is_finite() {
        s.next_down()
    } else {
        s
    }
}

pub fn div_up(a: f64, b: f64) -> f64 {
    let s = a / b;
    if s.is_finite() {
        s.next_up()
    } else {
        s
    }
}

pub fn div_down(a: f64, b: f64) -> f64 {
    let s = a / b;
    if s.is_finite() {
        s.next_down()
    } else {
        s
    }
}

pub fn exp_up(x: f64) -> f64 {
    let e = x.exp();
    if e.is_finite() {
        e.next_up().next_up()
    } else {
        e
    }
}

pub fn exp_down(x: f64) -> f64 {
    let e = x.exp();
    if e.is_finite() {
        e.next_down().next_down().max(0.0)
    } else {
        e
    }
}

pub fn ln_up(x: f64) -> f64 {
    let l = x.ln();
    if l.is_finite() {
        l.next_up().next_up()
    } else {
        l
    }
}

pub fn ln_down(x: f64) -> f64 {
    let l = x.ln();
    if l.is_finite() {
        l.next_down().next_down()
    } else {
        l
    }
}

pub fn ln_1p_up(x: f64) -> f64 {
    let l = x.ln_1p();
    if l.is_finite() {
        l.next_up().next_up()
    } else {
        l
    }
}

pub fn ln_1p_down(x: f64) -> f64 {
    let l = x.ln_1p();
    if l.is_finite() {
        l.next_down().next_down()
    } else {
        l
    }
}

/// `ln 2` rounded down (the nearest double lies below the true value).
pub const LN2_DOWN: f64 = std::f64::consts::LN_2;
/// `ln 2` rounded up.
pub const LN2_UP: f64 = f64::from_bits(std::f64::consts::LN_2.to_bits() + 1);

/// Upper bound on `ln(e^a + e^b)`.
pub fn log_add_exp_up(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    add_up(hi, ln_1p_up(exp_up(sub_up(lo, hi))))
}

/// Lower bound on `ln(e^a + e^b)`.
pub fn log_add_exp_down(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    let t = exp_down(sub_down(lo, hi));
    let l = t.ln_1p();
    let l = if l.is_finite() {
        l.next_down().next_down().max(0.0)
    } else {
        0.0
    };
    add_down(hi, l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::{ln2, Interval};

    #[test]
    fn ln2_constants_bracket() {
        let l = ln2(128);
        assert!(Interval::from_f64(LN2_DOWN).certainly_le(&l));
        assert!(l.certainly_le(&Interval::from_f64(LN2_UP)));
        assert_eq!(LN2_DOWN.next_up(), LN2_UP);
    }

    #[test]
    fn log_add_exp_brackets() {
        let a = 3.0f64;
        let b = 2.5f64;
        let exact = (a.exp() + b.exp()).ln();
        assert!(log_add_exp_down(a, b) <= exact && exact <= log_add_exp_up(a, b));
        assert_eq!(log_add_exp_up(f64::NEG_INFINITY, 1.0), 1.0);
        assert!(log_add_exp_up(1e6, 0.0) >= 1e6);
    }
}
