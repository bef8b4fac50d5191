//! Product perturbation bounds and their exact verification.

use num_rational::BigRational;
use rand::RngCore;
use serde::Serialize;

use crate::error::Result;
use crate::lattice::{systole_sq, LatticeBasis};
use crate::laws::StepDescriptor;
use crate::ratmat::{spectral_norm_enclosure, RationalMatrix};
use crate::real::{Dyadic, Rounding};

const PREC: u32 = 64;

fn up_mul(a: &Dyadic, b: &Dyadic) -> Dyadic {
    a.mul(b, PREC, Rounding::Up)
}

/// `τ n (1+τ)^n` rounded up.
fn tau_growth(tau: &Dyadic, n: usize) -> Dyadic {
    let one_plus = Dyadic::one().add(tau, PREC, Rounding::Up);
    let mut acc = up_mul(tau, &Dyadic::from_int(n as u64));
    for _ in 0..n {
        acc = up_mul(&acc, &one_plus);
    }
    acc
}

/// Upper bound `τ n (1+τ)^n Π ‖γ_k‖` on `‖Πγ'_k − Πγ_k‖`, from upper bounds on the norms.
pub fn product_difference_bound(norm_uppers: &[Dyadic], tau: &Dyadic) -> Dyadic {
    norm_uppers
        .iter()
        .fold(tau_growth(tau, norm_uppers.len()), |acc, x| up_mul(&acc, x))
}

fn ratio_factor(cond_uppers: &[Dyadic], tau: &Dyadic) -> Dyadic {
    product_difference_bound(cond_uppers, tau).add(&Dyadic::one(), PREC, Rounding::Up)
}

/// The systole ratio factor `1 + τ n (1+τ)^n Π ‖γ_k‖ ‖γ_k⁻¹‖`, rounded up; `+inf` when it
/// overflows `f64`.
pub fn perturbation_bound(steps: &[RationalMatrix], tau: f64) -> Result<f64> {
    let tau = Dyadic::from_f64(tau.max(0.0)).unwrap_or_else(|| Dyadic::from_int(1u64 << 62));
    let conds = steps
        .iter()
        .map(condition_upper)
        .collect::<Result<Vec<_>>>()?;
    Ok(ratio_factor(&conds, &tau).to_f64_dir(Rounding::Up))
}

fn condition_upper(g: &RationalMatrix) -> Result<Dyadic> {
    let a = spectral_norm_enclosure(g, PREC)?.upper;
    let b = spectral_norm_enclosure(&g.inverse()?, PREC)?.upper;
    Ok(up_mul(&a, &b))
}

fn left_product(steps: &[RationalMatrix], dim: usize) -> Result<RationalMatrix> {
    steps
        .iter()
        .try_fold(RationalMatrix::identity(dim), |acc, g| acc.mul(g))
}

/// Exact verification of both perturbation inequalities for one pair of step sequences.
#[derive(Clone, Debug, Serialize)]
pub struct PerturbedPairCheck {
    pub steps: usize,
    /// `max ‖γ'_k − γ_k‖ / ‖γ_k‖`, rounded up.
    pub tau: f64,
    /// Lower bound on `‖Πγ'_k − Πγ_k‖`.
    pub difference_lower: f64,
    pub difference_bound: f64,
    pub difference_ok: bool,
    /// Ratio factor (upper, may be `inf` in `f64`).
    pub factor: f64,
    /// `δ(perturbed) / δ(original)`, rounded to nearest.
    pub systole_ratio: f64,
    pub ratio_ok: bool,
}

impl PerturbedPairCheck {
    pub fn holds(&self) -> bool {
        self.difference_ok && self.ratio_ok
    }
}

/// Checks `‖Πγ' − Πγ‖ ≤ τ n (1+τ)^n Π‖γ_k‖` and `δ(Πγ'·base) ≤ F δ(Πγ·base)` with the
/// measured `τ`; the ratio is compared as `δ'² ≤ F² δ²` exactly.
pub fn check_perturbed_pair(
    original: &[RationalMatrix],
    perturbed: &[RationalMatrix],
    base: &LatticeBasis,
) -> Result<PerturbedPairCheck> {
    assert_eq!(original.len(), perturbed.len(), "pair of unequal length");
    let dim = base.dim();
    let mut tau = Dyadic::zero();
    let mut norms = Vec::with_capacity(original.len());
    let mut conds = Vec::with_capacity(original.len());
    for (g, h) in original.iter().zip(perturbed) {
        let n = spectral_norm_enclosure(g, PREC)?;
        let diff = spectral_norm_enclosure(&h.sub(g)?, PREC)?;
        let t = diff.upper.div(&n.lower, PREC, Rounding::Up);
        if t > tau {
            tau = t;
        }
        let inv = spectral_norm_enclosure(&g.inverse()?, PREC)?;
        conds.push(up_mul(&n.upper, &inv.upper));
        norms.push(n.upper);
    }
    let p = left_product(original, dim)?;
    let q = left_product(perturbed, dim)?;
    let difference_lower = spectral_norm_enclosure(&q.sub(&p)?, PREC)?.lower;
    let bound = product_difference_bound(&norms, &tau);
    let factor = ratio_factor(&conds, &tau);
    let d0 = systole_sq(&base.transform(&p)?)?.delta_sq;
    let d1 = systole_sq(&base.transform(&q)?)?.delta_sq;
    let f_sq = factor.mul_exact(&factor).to_rational();
    let ratio_ok = d1 <= f_sq * &d0;
    let ratio = Dyadic::from_rational(&(&d1 / &d0), PREC, Rounding::Down)
        .to_f64()
        .sqrt();
    Ok(PerturbedPairCheck {
        steps: original.len(),
        tau: tau.to_f64_dir(Rounding::Up),
        difference_lower: difference_lower.to_f64_dir(Rounding::Down),
        difference_bound: bound.to_f64_dir(Rounding::Up),
        difference_ok: difference_lower <= bound,
        factor: factor.to_f64_dir(Rounding::Up),
        systole_ratio: ratio,
        ratio_ok,
    })
}

/// Copies of `steps` whose shears move to `t + dt` with `|dt| ≤ τ/4`, so that
/// `‖γ'_k − γ_k‖ ≤ τ‖γ_k‖/4`.
pub fn perturbed_steps<R: RngCore + ?Sized>(
    steps: &[StepDescriptor],
    tau: f64,
    rng: &mut R,
) -> Vec<StepDescriptor> {
    steps
        .iter()
        .map(|s| {
            let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
            let dt = BigRational::from_float(0.25 * tau * (2.0 * u - 1.0)).expect("finite");
            let mut s = s.clone();
            s.shear_t += dt;
            s
        })
        .collect()
}
