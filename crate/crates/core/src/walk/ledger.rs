//! Log-domain height ledger and the systole certificate.

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::RngCore;
use serde::Serialize;

use super::{Certificate, CertificateKind};
use crate::error::Result;
use crate::laws::PreparedLaw;
use crate::laws::{
    core_height_log_bounds, sample_step, shear_t_height_log_upper, Core, MatrixLawSpec,
    StepDescriptor,
};
use crate::ratmat::{height_profile, RationalMatrix};
use crate::real::directed::{
    exp_down, exp_up, ln_1p_down, ln_down, ln_up, log_add_exp_up, sub_up, LN2_DOWN, LN2_UP,
};
use crate::real::Rounding;

/// Bounds on `ln H(γ)` of one factor of a product. Diagonal factors
/// `diag(2^{±m}, 2^{∓m}, 1, …)` carry a tight lower bound; other factors only an upper bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Factor {
    pub log_lower: f64,
    pub log_upper: f64,
    pub diagonal: bool,
}

impl Factor {
    pub fn bounded(log_upper: f64) -> Self {
        Factor {
            log_lower: f64::NEG_INFINITY,
            log_upper,
            diagonal: false,
        }
    }
}

/// Running max/sum of factor heights and the best diagonal factor, all as logarithms.
#[derive(Clone, Debug)]
pub struct HeightAccumulator {
    best: Option<Factor>,
    rest_up: f64,
    max_up: f64,
    sum_up: f64,
}

impl Default for HeightAccumulator {
    fn default() -> Self {
        HeightAccumulator {
            best: None,
            rest_up: f64::NEG_INFINITY,
            max_up: f64::NEG_INFINITY,
            sum_up: f64::NEG_INFINITY,
        }
    }
}

impl HeightAccumulator {
    pub fn push(&mut self, f: Factor) {
        self.sum_up = log_add_exp_up(self.sum_up, f.log_upper);
        self.max_up = self.max_up.max(f.log_upper);
        let better = f.diagonal && self.best.is_none_or(|b| f.log_lower > b.log_lower);
        if better {
            if let Some(b) = self.best.replace(f) {
                self.rest_up = log_add_exp_up(self.rest_up, b.log_upper);
            }
        } else {
            self.rest_up = log_add_exp_up(self.rest_up, f.log_upper);
        }
    }

    /// Upper bound on `ln max H`.
    pub fn log_max_upper(&self) -> f64 {
        self.max_up
    }

    /// Upper bound on `ln Σ H`.
    pub fn log_sum_upper(&self) -> f64 {
        self.sum_up
    }

    /// `H(best) − Σ_{others} H`, or `None` without a diagonal factor.
    pub fn certificate(&self, valid_at: usize) -> Option<Certificate> {
        let b = self.best?;
        Some(difference_certificate(b.log_lower, self.rest_up, valid_at))
    }
}

/// Lower bound on `e^a − e^b` given a lower bound `a` and an upper bound `b`.
fn difference_certificate(a: f64, b: f64, valid_at: usize) -> Certificate {
    let (value, log_value) = if a > b {
        let log_value = if b == f64::NEG_INFINITY {
            a
        } else {
            a + ln_1p_down(-exp_up(sub_up(b, a)))
        };
        let log_value = log_value.next_down();
        (
            exp_down(log_value).min(f64::MAX),
            Some(log_value).filter(|l| l.is_finite()),
        )
    } else {
        let hi = exp_up(b);
        let lo = exp_down(a).min(f64::MAX);
        ((lo - hi).next_down().max(f64::MIN), None)
    };
    Certificate {
        kind: CertificateKind::SystoleLower,
        value,
        log_value,
        valid_at,
    }
}

/// Certificate for a product whose factors are given in any order.
///
/// Factors are sorted canonically first, so the result does not depend on the order of the
/// product.
pub fn certificate_from_factors(factors: &[Factor], valid_at: usize) -> Option<Certificate> {
    let mut sorted = factors.to_vec();
    sorted.sort_by(|x, y| {
        (x.diagonal, x.log_lower, x.log_upper)
            .partial_cmp(&(y.diagonal, y.log_lower, y.log_upper))
            .expect("no NaN heights")
    });
    let mut acc = HeightAccumulator::default();
    for f in sorted {
        acc.push(f);
    }
    acc.certificate(valid_at)
}

/// `diag(2^{±m}, 2^{∓m}, 1, …)` with `m ≥ 1`, returning `m`.
fn pow2_diag_exponent(g: &RationalMatrix) -> Option<u64> {
    let d = g.dim();
    for i in 0..d {
        for j in 0..d {
            if i != j && !g.get(i, j).is_zero() {
                return None;
            }
        }
    }
    if (2..d).any(|i| !g.get(i, i).is_one()) {
        return None;
    }
    let a = g.get(0, 0);
    if !a.is_positive() || g.get(1, 1) != &a.recip() {
        return None;
    }
    let (n, den) = (a.numer(), a.denom());
    let p = if den.is_one() {
        n
    } else if n.is_one() {
        den
    } else {
        return None;
    };
    let m = p.bits() - 1;
    (p.is_positive() && p.magnitude().count_ones() == 1 && m >= 1).then_some(m)
}

fn log_of_height(m: f64) -> (f64, f64) {
    let lo = ln_down(m) + ln_down(LN2_DOWN);
    let hi = ln_up(m) + ln_up(LN2_UP);
    (lo.next_down(), hi.next_up())
}

/// Height bounds of an explicit matrix; exact for powers-of-two diagonals.
pub fn factor_of_matrix(g: &RationalMatrix) -> Result<Factor> {
    if let Some(m) = pow2_diag_exponent(g) {
        let (lo, hi) = log_of_height(m as f64);
        return Ok(Factor {
            log_lower: lo,
            log_upper: hi,
            diagonal: true,
        });
    }
    let h = height_profile(g, 64)?.height;
    let hi = h.hi().to_f64_dir(Rounding::Up);
    Ok(Factor::bounded(if hi > 0.0 {
        ln_up(hi)
    } else {
        f64::NEG_INFINITY
    }))
}

/// The factors `N_t` and the core of one step, in product order.
pub fn step_factors(step: &StepDescriptor, law: &PreparedLaw) -> [Factor; 2] {
    let (lo, hi) = core_height_log_bounds(step, law);
    let core = Factor {
        log_lower: lo,
        log_upper: hi,
        diagonal: step.is_diag() && hi > f64::NEG_INFINITY,
    };
    let shear = Factor::bounded(shear_t_height_log_upper(&step.shear_t));
    if step.sign < 0 {
        [core, shear]
    } else {
        [shear, core]
    }
}

/// Compact description of a step's core.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoreParam {
    Generator {
        index: usize,
    },
    Sampled,
    Diag {
        exponent: Option<u64>,
        log_exponent: f64,
    },
}

impl CoreParam {
    pub fn of(step: &StepDescriptor) -> Self {
        match &step.core {
            Core::Generator(i) => CoreParam::Generator { index: *i },
            Core::Sampled(..) => CoreParam::Sampled,
            Core::Diag(d) => CoreParam::Diag {
                exponent: d.exponent.as_ref().and_then(|m| m.to_u64()),
                log_exponent: d.log_exponent.0,
            },
        }
    }

    pub fn label(&self) -> (&'static str, String) {
        match self {
            CoreParam::Generator { index } => ("generator", index.to_string()),
            CoreParam::Sampled => ("sampled", String::new()),
            CoreParam::Diag {
                exponent: Some(m), ..
            } => ("diag", m.to_string()),
            CoreParam::Diag { log_exponent, .. } => ("diag", format!("exp({log_exponent})")),
        }
    }
}

/// Product order of a walk: `γ_1⋯γ_n` (left) or `γ_n⋯γ_1` (right).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProductOrder {
    Left,
    Right,
}

/// Height statistics of a walk, without materialized matrices.
#[derive(Clone, Debug, Serialize)]
pub struct LedgerTrace {
    /// Upper bound on `ln H(γ_k)` for each step (shear and core combined subadditively).
    pub heights_upper: Vec<f64>,
    /// `ln H` bounds of each step's core; zero-width up to rounding for diagonal cores.
    pub core_log_bounds: Vec<(f64, f64)>,
    /// Upper bound on `ln H(N_t)` of each step's shear.
    pub shear_log_upper: Vec<f64>,
    pub diag_flags: Vec<bool>,
    pub cores: Vec<CoreParam>,
    /// `ln m_n` (upper) after each step, over all factors.
    pub running_max: Vec<f64>,
    /// `ln s_n` (upper) after each step, over all factors.
    pub running_sum: Vec<f64>,
    pub certificates: Vec<Option<Certificate>>,
    /// `ln H` upper bound of the base point's basis (`-inf` for `Z^d`).
    pub base_log_upper: f64,
    /// Bits of matrix entries materialized by the engine.
    pub materialized_bits: u64,
}

impl LedgerTrace {
    pub(crate) fn new(base_log_upper: f64) -> Self {
        LedgerTrace {
            heights_upper: Vec::new(),
            core_log_bounds: Vec::new(),
            shear_log_upper: Vec::new(),
            diag_flags: Vec::new(),
            cores: Vec::new(),
            running_max: Vec::new(),
            running_sum: Vec::new(),
            certificates: Vec::new(),
            base_log_upper,
            materialized_bits: 0,
        }
    }

    pub(crate) fn record(
        &mut self,
        step: &StepDescriptor,
        law: &PreparedLaw,
        acc: &mut HeightAccumulator,
    ) {
        let factors = step_factors(step, law);
        let (core, shear) = if step.sign < 0 {
            (factors[0], factors[1])
        } else {
            (factors[1], factors[0])
        };
        for f in factors {
            acc.push(f);
        }
        let n = self.heights_upper.len() + 1;
        self.heights_upper
            .push(log_add_exp_up(core.log_upper, shear.log_upper));
        self.core_log_bounds.push((core.log_lower, core.log_upper));
        self.shear_log_upper.push(shear.log_upper);
        self.diag_flags.push(step.is_diag());
        self.cores.push(CoreParam::of(step));
        self.running_max.push(acc.log_max_upper());
        self.running_sum.push(acc.log_sum_upper());
        self.certificates.push(acc.certificate(n));
    }

    pub fn len(&self) -> usize {
        self.heights_upper.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heights_upper.is_empty()
    }

    /// All factors of the product after `n` steps, in the given order, base last.
    pub fn factors(&self, n: usize, order: ProductOrder) -> Vec<Factor> {
        let step = |k: usize| {
            let (lo, hi) = self.core_log_bounds[k];
            [
                Factor::bounded(self.shear_log_upper[k]),
                Factor {
                    log_lower: lo,
                    log_upper: hi,
                    diagonal: self.diag_flags[k] && hi > f64::NEG_INFINITY,
                },
            ]
        };
        let mut out: Vec<Factor> = match order {
            ProductOrder::Left => (0..n).flat_map(step).collect(),
            ProductOrder::Right => (0..n).rev().flat_map(step).collect(),
        };
        out.push(Factor::bounded(self.base_log_upper));
        out
    }

    /// The certificate after `n` steps recomputed from the factors in the given order.
    pub fn certificate_in_order(&self, n: usize, order: ProductOrder) -> Option<Certificate> {
        certificate_from_factors(&self.factors(n, order), n)
    }

    pub fn final_certificate(&self) -> Option<&Certificate> {
        self.certificates.last().and_then(|c| c.as_ref())
    }
}

/// Height bound of a base shear `N_t`, as a factor.
pub(crate) fn shear_factor(t: &BigRational) -> Factor {
    Factor::bounded(shear_t_height_log_upper(t))
}

/// Exponents of at most this many bits are still kept exactly by the ledger engine.
pub const LEDGER_FLOOR_BITS: u64 = 64;

/// Ledger walk from `Z^d`: heights only, no matrix is ever materialized.
pub fn run_ledger_walk<R: RngCore + ?Sized>(
    law: &MatrixLawSpec,
    n: usize,
    rng: &mut R,
) -> Result<LedgerTrace> {
    let mut law = law.prepare()?;
    // exact exponents are never needed here
    law.floor_bits = LEDGER_FLOOR_BITS;
    let mut trace = LedgerTrace::new(f64::NEG_INFINITY);
    let mut acc = HeightAccumulator::default();
    for _ in 0..n {
        let step = sample_step(&law, rng)?;
        trace.record(&step, &law, &mut acc);
    }
    Ok(trace)
}
