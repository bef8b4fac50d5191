//! Serialization helpers: decimal strings rounded so that printed enclosures stay valid.

use std::fmt::Display;

use serde::ser::SerializeStruct;
use serde::Serializer;

use super::{Dyadic, Interval, Rounding};

/// Significant digits used for decimal enclosure endpoints.
pub const DECIMAL_DIGITS: usize = 20;

pub fn ser_down<S: Serializer>(x: &Dyadic, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_decimal_dir(DECIMAL_DIGITS, Rounding::Down))
}

pub fn ser_up<S: Serializer>(x: &Dyadic, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_decimal_dir(DECIMAL_DIGITS, Rounding::Up))
}

pub fn ser_display<T: Display, S: Serializer>(x: &T, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_string())
}

pub fn ser_interval<S: Serializer>(x: &Interval, s: S) -> Result<S::Ok, S::Error> {
    let mut st = s.serialize_struct("Interval", 2)?;
    st.serialize_field(
        "lower",
        &x.lo().to_decimal_dir(DECIMAL_DIGITS, Rounding::Down),
    )?;
    st.serialize_field(
        "upper",
        &x.hi().to_decimal_dir(DECIMAL_DIGITS, Rounding::Up),
    )?;
    st.end()
}

pub fn ser_opt_interval<S: Serializer>(x: &Option<Interval>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => ser_interval(v, s),
        None => s.serialize_none(),
    }
}
