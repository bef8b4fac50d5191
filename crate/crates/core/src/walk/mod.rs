//! Random walks on unimodular lattices, in two engines.
//!
//! The exact engine materializes every step and computes exact systoles. The ledger engine
//! keeps only log-domain height bounds and evaluates the certificate
//! `−log δ(γ_1⋯γ_n·Z^d) ≥ H(γ_k) − Σ_{i≠k} H(γ_i)` for the largest diagonal factor.

mod csv;
mod exact;
mod ledger;
mod perturb;
mod shear;

use serde::Serialize;

pub use csv::{write_ledger_csv, write_walk_csv, CSV_HEADER};
pub use exact::{
    exact_walk_from_steps, neg_log_at_least, run_exact_walk, ExactOptions, WalkAbort, WalkTrace,
    WALK_BIT_BUDGET,
};
pub use ledger::{
    certificate_from_factors, factor_of_matrix, run_ledger_walk, step_factors, CoreParam, Factor,
    HeightAccumulator, LedgerTrace, ProductOrder,
};
pub use perturb::{
    check_perturbed_pair, perturbation_bound, perturbed_steps, product_difference_bound,
    PerturbedPairCheck,
};
pub use shear::{
    record_walk_law, run_walk_from_shear, RecordCheck, RecordWalkConfig, ShearWalk, SideConditions,
};

/// Which inequality a certificate comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    /// Largest diagonal height minus the sum of the other heights.
    SystoleLower,
    /// Systole ratio factor between a walk and its perturbation.
    PerturbRatio,
    /// The record-time bound `l_{j+1}/3`.
    RecordEscape,
}

/// A directed-rounded lower bound on `−log δ` (or, for `PerturbRatio`, an upper bound on a
/// systole ratio).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    /// The bound, saturating at `f64::MAX`; negative values are valid but vacuous.
    pub value: f64,
    /// Lower bound on `ln(value)` when the value is positive; survives overflow of `value`.
    pub log_value: Option<f64>,
    /// Number of steps taken when the certificate applies.
    pub valid_at: usize,
}

impl Certificate {
    /// Whether the certificate proves `−log δ > x`, for `x ≥ 0`.
    pub fn exceeds(&self, x: f64) -> bool {
        match self.log_value {
            Some(l) if x > 0.0 => l > x.ln(),
            _ => self.value > x,
        }
    }
}
