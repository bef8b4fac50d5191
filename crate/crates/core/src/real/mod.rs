//! Exact binary fractions and outward-rounded interval arithmetic.

pub mod directed;
mod dyadic;
mod interval;
pub mod serde_dyadic;

pub use dyadic::{Dyadic, Rounding};
pub use interval::{exp_point, exp_rational, floor_ceil, ln2, ln_int, ln_point, Interval};
