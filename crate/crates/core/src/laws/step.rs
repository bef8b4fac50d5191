//! Matrix-valued step laws and their seed-level coupling.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use super::full_support::sample_full_support_rational;
use super::rng::{uniform_open0, TrialRng};
use super::scalar::{
    scalar_value_with_floor_limit, LogDomainValue, ScalarLawSpec, MATERIALIZE_BITS,
};
use crate::error::{Error, Result};
use crate::ratmat::{
    format_rational, height_upper, RationalMatrix, DEFAULT_ENTRY_BIT_BUDGET, MAX_DIM,
};
use crate::real::directed::{add_down, add_up, ln_1p_up, ln_down, ln_up, mul_up, LN2_DOWN, LN2_UP};
use crate::real::Rounding;

/// The finite part `κ` of a step law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Kappa {
    Finite {
        generators: Vec<RationalMatrix>,
        weights: Vec<f64>,
    },
    /// The fixed full-support law of [`super::full_support`].
    FullSupport {
        #[serde(default)]
        height_budget: Option<f64>,
        #[serde(default = "default_max_trials")]
        max_trials: u64,
    },
}

fn default_max_trials() -> u64 {
    100_000
}

impl Kappa {
    /// Uniform on `{A, A⁻¹, B, B⁻¹}` with `A = I + E_{1,2}` and `B` the signed cyclic
    /// permutation; together they generate `SL_d(Z)`.
    pub fn default_generators(dim: usize) -> Self {
        let a = RationalMatrix::shear(dim, BigRational::one());
        let b = RationalMatrix::signed_cycle(dim);
        let generators = vec![
            a.clone(),
            a.inverse().expect("invertible"),
            b.clone(),
            b.inverse().expect("invertible"),
        ];
        Kappa::Finite {
            generators,
            weights: vec![0.25; 4],
        }
    }

    pub fn point_mass(g: RationalMatrix) -> Self {
        Kappa::Finite {
            generators: vec![g],
            weights: vec![1.0],
        }
    }
}

/// Which part of a dyadic address the shears use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Level {
    /// `l_j`: the first `j` digits.
    Finite { j: usize },
    /// `l_∞`, truncated after `depth` digits.
    Infinite { depth: usize },
}

impl Level {
    pub fn depth(&self) -> usize {
        match *self {
            Level::Finite { j } => j,
            Level::Infinite { depth } => depth,
        }
    }
}

/// Dyadic positions `i_1 < i_2 < …` of an address `t = Σ ε_k 2^{-i_k}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DyadicAddress {
    pub indices: Vec<u64>,
}

impl DyadicAddress {
    pub fn new(indices: Vec<u64>) -> Result<Self> {
        if indices.first().is_some_and(|&i| i == 0) || indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid(
                "address indices must be positive and strictly increasing",
            ));
        }
        Ok(DyadicAddress { indices })
    }

    /// `Σ_{k < depth} ε_k 2^{-i_k}`.
    pub fn value(&self, bits: &[bool], depth: usize) -> BigRational {
        let depth = depth.min(self.indices.len()).min(bits.len());
        let Some(&last) = self.indices[..depth].last() else {
            return BigRational::zero();
        };
        let mut num = BigInt::zero();
        for k in 0..depth {
            if bits[k] {
                num += BigInt::one() << (last - self.indices[k]) as usize;
            }
        }
        BigRational::new(num, BigInt::one() << last as usize)
    }
}

/// A step law: with probability `mix_weight` a diagonal core `diag(2^m, 2^-m, 1, …)` with
/// `m` from the scalar law, otherwise a draw of `κ`; then a shear `N_t` on the left and,
/// when `symmetrize` is set, a uniform sign `s` with the step `(N_t · core)^s`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixLawSpec {
    pub dim: usize,
    pub kappa: Kappa,
    pub scalar: ScalarLawSpec,
    pub mix_weight: f64,
    #[serde(default)]
    pub shear: Option<DyadicAddress>,
    #[serde(default)]
    pub symmetrize: bool,
    #[serde(default = "default_level")]
    pub level: Level,
    /// When present, a scalar value `l >= 1` selects the exponent `diag_exponents[l - 1]`.
    #[serde(default)]
    pub diag_exponents: Option<Vec<u64>>,
}

fn default_level() -> Level {
    Level::Finite { j: 0 }
}

impl MatrixLawSpec {
    /// `(κ + ν)/2` with the default generators.
    pub fn mixed(dim: usize, scalar: ScalarLawSpec) -> Self {
        MatrixLawSpec {
            dim,
            kappa: Kappa::default_generators(dim),
            scalar,
            mix_weight: 0.5,
            shear: None,
            symmetrize: false,
            level: default_level(),
            diag_exponents: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=MAX_DIM).contains(&self.dim) {
            return Err(Error::UnsupportedDimension(self.dim));
        }
        self.scalar.validate()?;
        if !(0.0..=1.0).contains(&self.mix_weight) {
            return Err(Error::invalid("mix_weight must lie in [0, 1]"));
        }
        if let Kappa::Finite {
            generators,
            weights,
        } = &self.kappa
        {
            if generators.is_empty() || generators.len() != weights.len() {
                return Err(Error::invalid("κ needs one weight per generator"));
            }
            if weights.iter().any(|w| !(*w >= 0.0))
                || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12
            {
                return Err(Error::invalid("κ weights must be nonnegative and sum to 1"));
            }
            for g in generators {
                if g.dim() != self.dim {
                    return Err(Error::DimensionMismatch(g.dim(), self.dim));
                }
                if !g.is_unimodular() {
                    return Err(Error::NotUnimodular);
                }
            }
        }
        let depth = self.level.depth();
        match &self.shear {
            Some(a) => {
                DyadicAddress::new(a.indices.clone())?;
                if depth > a.indices.len() {
                    return Err(Error::invalid("shear level deeper than the address"));
                }
            }
            None if depth > 0 => return Err(Error::invalid("shear level set without an address")),
            None => {}
        }
        if self.diag_exponents.as_ref().is_some_and(|t| t.is_empty()) {
            return Err(Error::invalid("empty exponent table"));
        }
        Ok(())
    }

    pub fn prepare(&self) -> Result<PreparedLaw> {
        self.validate()?;
        let heights = match &self.kappa {
            Kappa::Finite { generators, .. } => generators
                .iter()
                .map(|g| Ok(height_upper(g, 64)?.to_f64_dir(Rounding::Up)))
                .collect::<Result<Vec<_>>>()?,
            Kappa::FullSupport { .. } => Vec::new(),
        };
        Ok(PreparedLaw {
            spec: self.clone(),
            generator_heights: heights,
            floor_bits: MATERIALIZE_BITS,
        })
    }
}

/// A validated law with the generator heights precomputed.
#[derive(Clone, Debug)]
pub struct PreparedLaw {
    pub spec: MatrixLawSpec,
    /// Upper bounds on `H(g)` for the finite table, in table order.
    pub generator_heights: Vec<f64>,
    /// Diagonal exponents above `2^floor_bits` are kept in log form only.
    pub floor_bits: u64,
}

/// Uniform seeds of one step, drawn in a fixed order so that every step consumes the same
/// number of words.
#[derive(Clone, Debug, PartialEq)]
pub struct StepSeeds {
    pub u: f64,
    pub sign_negative: bool,
    pub pick: f64,
    pub sub_seed: u64,
    pub bits: Vec<bool>,
}

impl StepSeeds {
    pub fn draw<R: RngCore + ?Sized>(rng: &mut R, depth: usize) -> Self {
        let u = uniform_open0(rng);
        let sign_negative = rng.next_u64() & 1 == 1;
        let pick = uniform_open0(rng);
        let sub_seed = rng.next_u64();
        let mut bits = Vec::with_capacity(depth);
        while bits.len() < depth {
            let w = rng.next_u64();
            for b in 0..64.min(depth - bits.len()) {
                bits.push((w >> b) & 1 == 1);
            }
        }
        StepSeeds {
            u,
            sign_negative,
            pick,
            sub_seed,
            bits,
        }
    }
}

/// The diagonal core `diag(2^m, 2^-m, 1, …)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagCore {
    /// `m`, when materialized.
    pub exponent: Option<BigInt>,
    /// Directed bounds on `ln m` (`-inf` for `m = 0`).
    pub log_exponent: (f64, f64),
    /// The scalar draw behind `m`.
    pub value: LogDomainValue,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Core {
    Generator(usize),
    /// A draw of the full-support law with its height upper bound.
    Sampled(Box<RationalMatrix>, f64),
    Diag(DiagCore),
}

/// One symbolic step `(N_t · core)^{sign}`.
#[derive(Clone, Debug, PartialEq)]
pub struct StepDescriptor {
    pub sign: i8,
    pub shear_t: BigRational,
    pub core: Core,
    pub seeds: StepSeeds,
}

impl StepDescriptor {
    pub fn is_diag(&self) -> bool {
        matches!(self.core, Core::Diag(_))
    }

    /// `i` with `shear_t = a / 2^i` in lowest terms.
    pub fn shear_level_bits(&self) -> u64 {
        self.shear_t.denom().bits() - 1
    }

    /// Short text for the core column of trace exports.
    pub fn core_label(&self) -> (String, String) {
        match &self.core {
            Core::Generator(i) => ("generator".into(), i.to_string()),
            Core::Sampled(g, _) => ("sampled".into(), g.to_json()),
            Core::Diag(d) => (
                "diag".into(),
                match &d.exponent {
                    Some(m) => m.to_string(),
                    None => format!("exp({})", d.log_exponent.0),
                },
            ),
        }
    }

    pub fn shear_string(&self) -> String {
        format_rational(&self.shear_t)
    }
}

fn exponent_log_bounds(m: &BigInt) -> (f64, f64) {
    if m.is_zero() {
        return (f64::NEG_INFINITY, f64::NEG_INFINITY);
    }
    if let Some(x) = m.to_f64().filter(|x| *x < 9.0e15) {
        return (ln_down(x), ln_up(x));
    }
    let l = crate::real::ln_int(m, 64);
    (l.lower_f64(), l.upper_f64())
}

/// Builds the step from its seeds: `u <= mix_weight` selects the diagonal core with scalar
/// seed `u / mix_weight` mapped onto the scalar law's seed interval.
pub fn step_from_seeds(law: &PreparedLaw, seeds: StepSeeds) -> Result<StepDescriptor> {
    let spec = &law.spec;
    let core = if spec.mix_weight > 0.0 && seeds.u <= spec.mix_weight {
        let t = spec.scalar.seed_from_uniform(seeds.u / spec.mix_weight);
        let value = scalar_value_with_floor_limit(
            &spec.scalar,
            &BigRational::from_float(t).expect("finite"),
            law.floor_bits,
        )?;
        let (exponent, log_exponent) = match &spec.diag_exponents {
            Some(table) => {
                let l = value
                    .exact_exponent
                    .as_ref()
                    .and_then(|l| l.to_usize())
                    .filter(|l| (1..=table.len()).contains(l))
                    .ok_or_else(|| Error::invalid("scalar draw outside the exponent table"))?;
                let m = BigInt::from(table[l - 1]);
                let b = exponent_log_bounds(&m);
                (Some(m), b)
            }
            None => match &value.exact_exponent {
                Some(m) => (Some(m.clone()), exponent_log_bounds(m)),
                None => (None, value.floor_log_bounds()),
            },
        };
        Core::Diag(DiagCore {
            exponent,
            log_exponent,
            value,
        })
    } else {
        match &spec.kappa {
            Kappa::Finite { weights, .. } => {
                let mut acc = 0.0;
                let mut idx = weights.len() - 1;
                for (i, w) in weights.iter().enumerate() {
                    acc += w;
                    if seeds.pick <= acc {
                        idx = i;
                        break;
                    }
                }
                Core::Generator(idx)
            }
            Kappa::FullSupport {
                height_budget,
                max_trials,
            } => {
                let mut sub = TrialRng::seed_from_u64(seeds.sub_seed);
                let (g, h) =
                    sample_full_support_rational(&mut sub, spec.dim, *height_budget, *max_trials)?;
                Core::Sampled(Box::new(g), h)
            }
        }
    };
    let shear_t = match &spec.shear {
        Some(a) => a.value(&seeds.bits, spec.level.depth()),
        None => BigRational::zero(),
    };
    let sign = if spec.symmetrize && seeds.sign_negative {
        -1
    } else {
        1
    };
    Ok(StepDescriptor {
        sign,
        shear_t,
        core,
        seeds,
    })
}

pub fn sample_step<R: RngCore + ?Sized>(law: &PreparedLaw, rng: &mut R) -> Result<StepDescriptor> {
    let depth = law.spec.shear.as_ref().map_or(0, |a| a.indices.len());
    step_from_seeds(law, StepSeeds::draw(rng, depth))
}

/// The exact matrix `(N_t · core)^{sign}`; diagonal exponents must have at most
/// `bit_budget` bits.
pub fn realize_step_matrix(
    step: &StepDescriptor,
    law: &PreparedLaw,
    bit_budget: u64,
) -> Result<RationalMatrix> {
    let dim = law.spec.dim;
    let core = match &step.core {
        Core::Generator(i) => match &law.spec.kappa {
            Kappa::Finite { generators, .. } => generators[*i].clone(),
            Kappa::FullSupport { .. } => {
                return Err(Error::invalid("generator index on a full-support law"))
            }
        },
        Core::Sampled(g, _) => (**g).clone(),
        Core::Diag(d) => {
            let m = d
                .exponent
                .as_ref()
                .and_then(|m| m.to_i64())
                .filter(|m| (*m as u64) < bit_budget)
                .ok_or(Error::BudgetExceeded {
                    needed: d.log_exponent.1.exp().min(u64::MAX as f64) as u64,
                    budget: bit_budget,
                })?;
            RationalMatrix::diag_pow2(dim, m)
        }
    };
    let g = if step.shear_t.is_zero() {
        core
    } else {
        RationalMatrix::shear(dim, step.shear_t.clone()).mul(&core)?
    };
    if step.sign < 0 {
        g.inverse()?.into_unimodular()
    } else {
        Ok(g)
    }
}

/// Directed bounds on `H` of the core: exact `m ln 2` for diagonal cores.
pub fn core_height_log_bounds(step: &StepDescriptor, law: &PreparedLaw) -> (f64, f64) {
    match &step.core {
        Core::Generator(i) => {
            let h = law.generator_heights[*i];
            (
                f64::NEG_INFINITY,
                if h > 0.0 { ln_up(h) } else { f64::NEG_INFINITY },
            )
        }
        Core::Sampled(_, h) => (
            f64::NEG_INFINITY,
            if *h > 0.0 {
                ln_up(*h)
            } else {
                f64::NEG_INFINITY
            },
        ),
        Core::Diag(d) => (
            add_down(d.log_exponent.0, ln_down(LN2_DOWN)),
            add_up(d.log_exponent.1, ln_up(LN2_UP)),
        ),
    }
}

/// Upper bound on `ln H(N_t)` (`-inf` for `t = 0`).
///
/// For `t = a / 2^i` in lowest terms, `q(N_t) = q'(N_t) = 2^i` and `‖N_t^{±1}‖ ≤ 1 + |t|`,
/// so `H(N_t) ≤ max{i ln 2, ln(1 + |t|)}`.
pub fn shear_height_log_upper(step: &StepDescriptor) -> f64 {
    shear_t_height_log_upper(&step.shear_t)
}

/// [`shear_height_log_upper`] for a bare shear parameter.
pub fn shear_t_height_log_upper(t: &BigRational) -> f64 {
    if t.is_zero() {
        return f64::NEG_INFINITY;
    }
    let i = t.denom().bits() - 1;
    let den = if i > 0 { mul_up(i as f64, LN2_UP) } else { 0.0 };
    let abs = num_traits::Signed::abs(t)
        .to_f64()
        .unwrap_or(f64::MAX)
        .abs();
    let norm = ln_1p_up(abs.next_up());
    ln_up(den.max(norm))
}

/// Default budget for realized entries.
pub const STEP_BIT_BUDGET: u64 = DEFAULT_ENTRY_BIT_BUDGET;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::rng::trial_rng;
    use crate::ratmat::rat;

    fn diag_law(dim: usize) -> PreparedLaw {
        let mut spec = MatrixLawSpec::mixed(dim, ScalarLawSpec::power_floor(2.0, 1.0));
        spec.mix_weight = 1.0;
        spec.prepare().unwrap()
    }

    fn diag_step(m: i64, sign: i8, t: BigRational) -> StepDescriptor {
        let mb = BigInt::from(m);
        StepDescriptor {
            sign,
            shear_t: t,
            core: Core::Diag(DiagCore {
                exponent: Some(mb.clone()),
                log_exponent: exponent_log_bounds(&mb),
                value: LogDomainValue {
                    log_value: None,
                    exact_exponent: Some(mb),
                },
            }),
            seeds: StepSeeds {
                u: 1.0,
                sign_negative: sign < 0,
                pick: 1.0,
                sub_seed: 0,
                bits: vec![],
            },
        }
    }

    #[test]
    fn realize_examples() {
        let law = diag_law(3);
        let id = realize_step_matrix(&diag_step(0, 1, rat(0, 1)), &law, 64).unwrap();
        assert_eq!(id, RationalMatrix::identity(3));
        let inv = realize_step_matrix(&diag_step(3, -1, rat(0, 1)), &law, 64).unwrap();
        assert_eq!(inv, RationalMatrix::diag_pow2(3, -3));
        let law2 = diag_law(2);
        let g = realize_step_matrix(&diag_step(1, 1, rat(1, 2)), &law2, 64).unwrap();
        let expect =
            RationalMatrix::from_ratio_rows(&[&[(2, 1), (1, 4)], &[(0, 1), (1, 2)]]).unwrap();
        assert_eq!(g, expect);
        assert!(realize_step_matrix(&diag_step(100, 1, rat(0, 1)), &law2, 64).is_err());
    }

    #[test]
    fn address_values() {
        let a = DyadicAddress::new(vec![1, 3]).unwrap();
        assert_eq!(a.value(&[true, true], 2), rat(5, 8));
        assert_eq!(a.value(&[false, true], 1), rat(0, 1));
        assert_eq!(a.value(&[true, true], 1), rat(1, 2));
        assert!(DyadicAddress::new(vec![3, 3]).is_err());
        assert!(DyadicAddress::new(vec![0, 3]).is_err());
    }

    #[test]
    fn degenerate_mixtures() {
        let mut spec = MatrixLawSpec::mixed(2, ScalarLawSpec::power_floor(2.0, 1.0));
        spec.mix_weight = 0.0;
        let law = spec.prepare().unwrap();
        let mut rng = trial_rng(3, 0);
        for _ in 0..200 {
            let s = sample_step(&law, &mut rng).unwrap();
            assert!(matches!(s.core, Core::Generator(_)));
            assert_eq!(s.sign, 1);
        }
    }

    #[test]
    fn exponent_table_lookup() {
        let mut spec = MatrixLawSpec::mixed(
            2,
            ScalarLawSpec::simple_record_cube()
                .with_t_min(super::super::scalar::simple_record_t_min(3)),
        );
        spec.mix_weight = 1.0;
        spec.diag_exponents = Some(vec![1, 4, 25]);
        let law = spec.prepare().unwrap();
        let mut rng = trial_rng(8, 0);
        for _ in 0..100 {
            let s = sample_step(&law, &mut rng).unwrap();
            match s.core {
                Core::Diag(d) => assert!([1, 4, 25]
                    .map(BigInt::from)
                    .contains(d.exponent.as_ref().unwrap())),
                _ => panic!("mix weight 1"),
            }
        }
    }

    #[test]
    fn spec_round_trips_through_json() {
        let mut spec = MatrixLawSpec::mixed(2, ScalarLawSpec::heavy_record_exp());
        spec.shear = Some(DyadicAddress::new(vec![1, 3, 7]).unwrap());
        spec.level = Level::Infinite { depth: 3 };
        spec.symmetrize = true;
        let json = serde_json::to_string(&spec).unwrap();
        let back: MatrixLawSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
        assert!(serde_json::from_str::<MatrixLawSpec>(r#"{"dim":2,"bogus":1}"#).is_err());
    }
}
