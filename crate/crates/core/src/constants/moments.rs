//! Moment constants of a step law: the height bound `M` and the condition moment `M'`.
//!
//! `M'` integrates `log(‖γ‖‖γ⁻¹‖)^{p'}`. On a diagonal core `diag(2^m, 2^{-m}, 1, …)` the
//! integrand is `(2 m log 2)^{p'}`; for `m = ⌊t^{-p}⌋` with `t` uniform on `(0, e]` its mean
//! has the closed bracket `[(1 − e^p)^{p'} c, c]`, `c = (2 log 2)^{p'} e^{-pp'}/(1 − pp')`,
//! and diverges once `p p' ≥ 1`.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::laws::{
    enumerate_sl, sample_full_support_index, trial_rng, uniform_open0, Kappa, MatrixLawSpec,
    ScalarKind,
};
use crate::ratmat::{height_profile, RationalMatrix};
use crate::real::Rounding;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentMode {
    Max,
    Mean,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    MonteCarlo,
    ClosedBracket,
    Divergent,
}

/// A point estimate with lower and upper bounds (a 95% interval for Monte Carlo).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Estimate {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    pub std_error: Option<f64>,
    pub method: Method,
}

impl Estimate {
    fn exact(lower: f64, upper: f64) -> Self {
        Estimate {
            estimate: 0.5 * (lower + upper),
            lower,
            upper,
            std_error: None,
            method: Method::Exact,
        }
    }

    fn monte_carlo(samples: &[f64]) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        let se = (var / n).sqrt();
        Estimate {
            estimate: mean,
            lower: mean - 1.96 * se,
            upper: mean + 1.96 * se,
            std_error: Some(se),
            method: Method::MonteCarlo,
        }
    }

    fn divergent() -> Self {
        Estimate {
            estimate: f64::INFINITY,
            lower: f64::INFINITY,
            upper: f64::INFINITY,
            std_error: None,
            method: Method::Divergent,
        }
    }

    fn mix(a: f64, x: &Estimate, y: &Estimate) -> Estimate {
        let comb = |u: f64, v: f64| a * u + (1.0 - a) * v;
        let se = match (x.std_error, y.std_error) {
            (None, None) => None,
            (s, t) => Some(
                ((a * s.unwrap_or(0.0)).powi(2) + ((1.0 - a) * t.unwrap_or(0.0)).powi(2)).sqrt(),
            ),
        };
        let method = if x.method == Method::Divergent || y.method == Method::Divergent {
            Method::Divergent
        } else if se.is_some() {
            Method::MonteCarlo
        } else {
            x.method
        };
        Estimate {
            estimate: comb(x.estimate, y.estimate),
            lower: comb(x.lower, y.lower),
            upper: comb(x.upper, y.upper),
            std_error: se,
            method,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionMoment {
    pub p_prime: f64,
    /// Closed bracket of the diagonal part, when the scalar law is a power floor.
    pub diagonal_bracket: Option<Estimate>,
    pub diagonal_monte_carlo: Estimate,
    pub kappa_part: Estimate,
    pub total: Estimate,
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentConstants {
    pub mode: MomentMode,
    pub m: Estimate,
    pub m_prime: Option<ConditionMoment>,
    pub trials: u64,
    pub seed: u64,
}

const PRECISION: u32 = 64;

fn height_bounds(g: &RationalMatrix) -> Result<(f64, f64)> {
    let h = height_profile(g, PRECISION)?.height;
    Ok((
        h.lo().to_f64_dir(Rounding::Down).max(0.0),
        h.hi().to_f64_dir(Rounding::Up),
    ))
}

fn log_condition(g: &RationalMatrix) -> Result<f64> {
    let p = height_profile(g, PRECISION)?;
    Ok(
        (p.norm.interval().mid_f64() * p.norm_inv.interval().mid_f64())
            .ln()
            .max(0.0),
    )
}

fn full_support_samples<F: FnMut(u64) -> Result<f64>>(
    dim: usize,
    height_budget: Option<f64>,
    max_trials: u64,
    trials: u64,
    seed: u64,
    mut f: F,
) -> Result<Vec<f64>> {
    let mut rng = trial_rng(seed, 0);
    let mut cache: HashMap<u64, f64> = HashMap::new();
    (0..trials)
        .map(|_| {
            let k = sample_full_support_index(&mut rng, dim, height_budget, max_trials)?;
            if let Some(&v) = cache.get(&k) {
                return Ok(v);
            }
            let v = f(k)?;
            cache.insert(k, v);
            Ok(v)
        })
        .collect()
}

/// Closed bracket of `E[(2 log 2 ⌊t^{-p}⌋)^{p'}]` for `t` uniform on `(0, end]`.
pub fn diagonal_condition_bracket(p: f64, end: f64, p_prime: f64) -> Estimate {
    let q = p * p_prime;
    if q >= 1.0 {
        return Estimate::divergent();
    }
    let c = (2.0 * std::f64::consts::LN_2).powf(p_prime) * end.powf(-q) / (1.0 - q);
    let lower = (1.0 - end.powf(p)).max(0.0).powf(p_prime) * c;
    // widen by a few ulps for the float evaluation
    Estimate {
        estimate: 0.5 * (lower + c),
        lower: lower * (1.0 - 1e-12),
        upper: c * (1.0 + 1e-12),
        std_error: None,
        method: Method::ClosedBracket,
    }
}

/// `M` (max or mean height of `κ`) and, when `p_prime` is given, `M'` for the mixture law.
pub fn moment_constants(
    law: &MatrixLawSpec,
    mode: MomentMode,
    p_prime: Option<f64>,
    trials: u64,
    seed: u64,
) -> Result<MomentConstants> {
    law.validate()?;
    let dim = law.dim;
    let m = match (&law.kappa, mode) {
        (Kappa::Finite { generators, .. }, _) if generators.is_empty() => {
            return Err(Error::invalid("empty support table"))
        }
        (Kappa::Finite { generators, .. }, MomentMode::Max) => {
            let hs = generators
                .iter()
                .map(height_bounds)
                .collect::<Result<Vec<_>>>()?;
            let lo = hs.iter().map(|h| h.0).fold(0.0, f64::max);
            let hi = hs.iter().map(|h| h.1).fold(0.0, f64::max);
            Estimate::exact(lo, hi)
        }
        (
            Kappa::Finite {
                generators,
                weights,
            },
            MomentMode::Mean,
        ) => {
            let total: f64 = weights.iter().sum();
            let (mut lo, mut hi) = (0.0, 0.0);
            for (g, w) in generators.iter().zip(weights) {
                let (a, b) = height_bounds(g)?;
                lo += a * w / total;
                hi += b * w / total;
            }
            Estimate::exact(lo, hi)
        }
        (Kappa::FullSupport { .. }, MomentMode::Max) => {
            return Err(Error::invalid(
                "max height is unbounded on a full-support law",
            ))
        }
        (
            Kappa::FullSupport {
                height_budget,
                max_trials,
            },
            MomentMode::Mean,
        ) => {
            if trials < 2 {
                return Err(Error::invalid("Monte Carlo needs at least 2 trials"));
            }
            let s = full_support_samples(dim, *height_budget, *max_trials, trials, seed, |k| {
                Ok(height_bounds(&enumerate_sl(dim, k))?.1)
            })?;
            Estimate::monte_carlo(&s)
        }
    };
    let m_prime = match p_prime {
        None => None,
        Some(pp) => {
            if !(pp > 0.0 && pp < 1.0) {
                return Err(Error::invalid("p' must lie in (0, 1)"));
            }
            if trials < 2 {
                return Err(Error::invalid("Monte Carlo needs at least 2 trials"));
            }
            Some(condition_moment(law, pp, trials, seed)?)
        }
    };
    Ok(MomentConstants {
        mode,
        m,
        m_prime,
        trials,
        seed,
    })
}

fn condition_moment(
    law: &MatrixLawSpec,
    pp: f64,
    trials: u64,
    seed: u64,
) -> Result<ConditionMoment> {
    let dim = law.dim;
    let scalar = &law.scalar;
    let diagonal_bracket = match scalar.kind {
        ScalarKind::PowerFloor { p } if scalar.t_min.is_none() => {
            Some(diagonal_condition_bracket(p, scalar.domain_end, pp))
        }
        _ => None,
    };
    let mut rng = trial_rng(seed, 1);
    let ln2 = std::f64::consts::LN_2;
    let diag: Vec<f64> = (0..trials)
        .map(|_| {
            let t = scalar.seed_from_uniform(uniform_open0(&mut rng));
            let v = match &scalar.kind {
                ScalarKind::HeavyRecordExp => (t * t).recip().exp(),
                ScalarKind::PowerFloor { p } | ScalarKind::PowerReal { p } => t.powf(-p),
                ScalarKind::SimpleRecordCube => (t * t * t).recip(),
                ScalarKind::BoundedMixtureComponent { values } => {
                    let idx =
                        ((t * values.len() as f64).ceil() as usize).clamp(1, values.len()) - 1;
                    values[idx]
                }
            };
            (2.0 * v.floor() * ln2).powf(pp)
        })
        .collect();
    let diagonal_monte_carlo = Estimate::monte_carlo(&diag);
    let kappa_part = match &law.kappa {
        Kappa::Finite {
            generators,
            weights,
        } => {
            let total: f64 = weights.iter().sum();
            let mut acc = 0.0;
            for (g, w) in generators.iter().zip(weights) {
                acc += log_condition(g)?.powf(pp) * w / total;
            }
            Estimate::exact(acc, acc)
        }
        Kappa::FullSupport {
            height_budget,
            max_trials,
        } => {
            let s = full_support_samples(
                dim,
                *height_budget,
                *max_trials,
                trials,
                seed ^ 0x9e37_79b9,
                |k| Ok(log_condition(&enumerate_sl(dim, k))?.powf(pp)),
            )?;
            Estimate::monte_carlo(&s)
        }
    };
    let diag_total = diagonal_bracket.unwrap_or(diagonal_monte_carlo);
    let total = Estimate::mix(law.mix_weight, &diag_total, &kappa_part);
    Ok(ConditionMoment {
        p_prime: pp,
        diagonal_bracket,
        diagonal_monte_carlo,
        kappa_part,
        total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::ScalarLawSpec;

    #[test]
    fn identity_table_has_zero_height() {
        let mut law = MatrixLawSpec::mixed(2, ScalarLawSpec::heavy_record_exp());
        law.kappa = Kappa::point_mass(RationalMatrix::identity(2));
        let m = moment_constants(&law, MomentMode::Max, None, 10, 1).unwrap();
        assert_eq!(m.m.upper, 0.0);
    }

    #[test]
    fn default_table_max_is_golden_ratio_log() {
        let law = MatrixLawSpec::mixed(2, ScalarLawSpec::heavy_record_exp());
        let m = moment_constants(&law, MomentMode::Max, None, 10, 1).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!(m.m.lower <= phi.ln() + 1e-12 && phi.ln() - 1e-12 <= m.m.upper);
    }

    #[test]
    fn divergent_and_convergent_brackets() {
        assert_eq!(
            diagonal_condition_bracket(2.0, 0.5, 0.5).method,
            Method::Divergent
        );
        let b = diagonal_condition_bracket(1.5, 0.5, 0.5);
        assert!(b.lower > 0.0 && b.lower < b.upper && b.upper.is_finite());
    }
}
