//! Exact engine: materialized steps, exact running products and exact systoles.

use num_rational::BigRational;
use rand::RngCore;
use serde::Serialize;

use super::ledger::{HeightAccumulator, LedgerTrace};
use crate::error::{Error, Result};
use crate::lattice::{neg_log_from_sq, systole_sq_with_budget, LatticeBasis, SystoleResult};
use crate::laws::{realize_step_matrix, sample_step, MatrixLawSpec, PreparedLaw, StepDescriptor};
use crate::ratmat::{height_upper, RationalMatrix};
use crate::real::directed::ln_up;
use crate::real::{Dyadic, Rounding};

/// Default per-entry bit budget of the exact engine.
pub const WALK_BIT_BUDGET: u64 = 1 << 22;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ExactOptions {
    /// Also track `γ_n⋯γ_1` and its systoles.
    pub both_orders: bool,
    pub bit_budget: u64,
}

impl Default for ExactOptions {
    fn default() -> Self {
        ExactOptions {
            both_orders: false,
            bit_budget: WALK_BIT_BUDGET,
        }
    }
}

/// Why an exact walk stopped early.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WalkAbort {
    /// The step (1-based) that could not be completed.
    pub step: usize,
    pub reason: String,
}

/// An exact walk `γ_1, …, γ_n` from a base lattice.
#[derive(Clone, Debug)]
pub struct WalkTrace {
    pub steps: Vec<StepDescriptor>,
    pub base: LatticeBasis,
    /// `γ_1⋯γ_n`.
    pub left_product: Option<RationalMatrix>,
    /// `γ_n⋯γ_1`, when both orders are tracked.
    pub right_product: Option<RationalMatrix>,
    /// Systole of `γ_1⋯γ_k·base` after each step `k`.
    pub systoles: Vec<SystoleResult>,
    /// Systole of `γ_k⋯γ_1·base` after each step `k`.
    pub right_systoles: Option<Vec<SystoleResult>>,
    /// Height ledger of the same steps, base included.
    pub ledger: LedgerTrace,
    pub aborted: Option<WalkAbort>,
}

impl WalkTrace {
    pub fn len(&self) -> usize {
        self.systoles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.systoles.is_empty()
    }

    /// Steps (1-based) where some tracked order has `−log δ` below the certificate.
    pub fn certificate_violations(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for (k, cert) in self.ledger.certificates.iter().enumerate() {
            let Some(c) = cert else { continue };
            let left = neg_log_at_least(&self.systoles[k].delta_sq, c.value);
            let right = self
                .right_systoles
                .as_ref()
                .is_none_or(|r| neg_log_at_least(&r[k].delta_sq, c.value));
            if !(left && right) {
                out.push(k + 1);
            }
        }
        out
    }

    /// Number of steps carrying a certificate.
    pub fn certified_steps(&self) -> usize {
        self.ledger
            .certificates
            .iter()
            .filter(|c| c.is_some())
            .count()
    }

    /// Midpoints of the exact `−log δ` series (left order).
    pub fn neg_log_delta_series(&self) -> Vec<f64> {
        self.systoles
            .iter()
            .map(|s| s.neg_log_delta.mid_f64())
            .collect()
    }
}

/// Decides `−log δ ≥ c` from `δ²`, raising precision until the enclosure separates; an
/// unresolved tie counts as satisfied.
pub fn neg_log_at_least(delta_sq: &BigRational, c: f64) -> bool {
    if c == f64::NEG_INFINITY {
        return true;
    }
    let Some(c) = Dyadic::from_f64(c) else {
        return false;
    };
    let mut prec = 128;
    while prec <= 8192 {
        let e = neg_log_from_sq(delta_sq, prec);
        if e.lo() >= &c {
            return true;
        }
        if e.hi() < &c {
            return false;
        }
        prec *= 2;
    }
    true
}

pub(crate) fn base_log_upper(base: &LatticeBasis) -> Result<f64> {
    let h = height_upper(base.matrix(), 64)?.to_f64_dir(Rounding::Up);
    Ok(if h > 0.0 { ln_up(h) } else { f64::NEG_INFINITY })
}

/// Runs the exact engine on explicit steps. A budget failure ends the walk early with a
/// partial trace; other errors propagate.
pub fn exact_walk_from_steps(
    law: &PreparedLaw,
    steps: Vec<StepDescriptor>,
    base: &LatticeBasis,
    opts: ExactOptions,
) -> Result<WalkTrace> {
    let d = law.spec.dim;
    if base.dim() != d {
        return Err(Error::DimensionMismatch(base.dim(), d));
    }
    let mut trace = WalkTrace {
        steps: Vec::with_capacity(steps.len()),
        base: base.clone(),
        left_product: Some(RationalMatrix::identity(d)),
        right_product: opts.both_orders.then(|| RationalMatrix::identity(d)),
        systoles: Vec::with_capacity(steps.len()),
        right_systoles: opts.both_orders.then(Vec::new),
        ledger: LedgerTrace::new(base_log_upper(base)?),
        aborted: None,
    };
    let mut acc = HeightAccumulator::default();
    if trace.ledger.base_log_upper > f64::NEG_INFINITY {
        acc.push(super::Factor::bounded(trace.ledger.base_log_upper));
    }
    for (k, step) in steps.into_iter().enumerate() {
        match advance(&mut trace, &step, law, opts.bit_budget) {
            Ok(()) => {
                trace.ledger.record(&step, law, &mut acc);
                trace.steps.push(step);
            }
            Err(e @ Error::BudgetExceeded { .. }) => {
                trace.aborted = Some(WalkAbort {
                    step: k + 1,
                    reason: e.to_string(),
                });
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(trace)
}

fn advance(
    trace: &mut WalkTrace,
    step: &StepDescriptor,
    law: &PreparedLaw,
    budget: u64,
) -> Result<()> {
    let g = realize_step_matrix(step, law, budget)?;
    let left = trace
        .left_product
        .as_ref()
        .expect("left product tracked")
        .mul_with_budget(&g, budget)?;
    let s = systole_sq_with_budget(&trace.base.transform(&left)?, budget)?;
    let right = match &trace.right_product {
        Some(r) => {
            let r = g.mul_with_budget(r, budget)?;
            let s = systole_sq_with_budget(&trace.base.transform(&r)?, budget)?;
            Some((r, s))
        }
        None => None,
    };
    trace.left_product = Some(left);
    trace.systoles.push(s);
    if let Some((r, s)) = right {
        trace.right_product = Some(r);
        trace.right_systoles.as_mut().expect("tracked").push(s);
    }
    Ok(())
}

/// `n` steps of the exact engine from `base`.
pub fn run_exact_walk<R: RngCore + ?Sized>(
    law: &MatrixLawSpec,
    n: usize,
    base: &LatticeBasis,
    rng: &mut R,
    opts: ExactOptions,
) -> Result<WalkTrace> {
    let law = law.prepare()?;
    let steps = (0..n)
        .map(|_| sample_step(&law, rng))
        .collect::<Result<Vec<_>>>()?;
    exact_walk_from_steps(&law, steps, base, opts)
}
