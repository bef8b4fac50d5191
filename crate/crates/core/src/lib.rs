//! Exact-arithmetic random walks on the space of unimodular lattices.
//!
//! Layers, bottom up: [`real`] (directed rounding), [`ratmat`] (rational matrices and
//! heights), [`lattice`] (systoles), [`laws`] (samplers), [`constants`], [`walk`]
//! (exact and ledger engines plus certificates) and [`experiments`].

// `!(x >= 0.0)` is how NaN gets rejected; reduction code indexes on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod constants;
pub mod error;
pub mod experiments;
pub mod lattice;
pub mod laws;
pub mod ratmat;
pub mod real;
pub mod walk;

pub use error::{Error, Result};
pub use experiments::{ExperimentConfig, ExperimentName, ExperimentReport};
pub use lattice::{LatticeBasis, SystoleResult};
pub use ratmat::{HeightProfile, NormEnclosure, RationalMatrix};
pub use real::{Dyadic, Interval, Rounding};
pub use walk::{Certificate, CertificateKind};

/// Version of this crate, recorded in report manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
