//! Walks started from a sheared lattice `N_t·Z^d`, with the record-time escape check.
//!
//! Steps are `h_n γ_n` with `γ_n = diag(2^{l_{j_n}}, 2^{-l_{j_n}}, 1, …)` driven by integers
//! `j_n` (generator steps count as `j_n = 0`) and shears `h_n = N_{t_n}` from a dyadic
//! address. At step `n`, with `j + 1 = max_{k≤n} j_k`, the walk truncated to `j` address
//! digits should satisfy `−log δ ≥ l_{j+1}/3` once
//! `n ≥ 2`, the record is simple, `max_k j_k ≥ n²`, and the generator heights sum to at
//! most `2Mn`.
//! Truncating deeper than `j` should change the systole by a factor of at most 2.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::RngCore;
use serde::Serialize;

use super::exact::{exact_walk_from_steps, neg_log_at_least, ExactOptions, WalkTrace};
use super::ledger::{certificate_from_factors, shear_factor, step_factors};
use super::perturb::{check_perturbed_pair, PerturbedPairCheck};
use super::{Certificate, CertificateKind};
use crate::error::{Error, Result};
use crate::lattice::{systole_sq_with_budget, LatticeBasis};
use crate::laws::{
    realize_step_matrix, sample_step, simple_record_t_min, Core, DyadicAddress, Kappa, Level,
    MatrixLawSpec, PreparedLaw, ScalarLawSpec, StepDescriptor,
};
use crate::ratmat::{format_rational, RationalMatrix};

#[derive(Clone, Debug, Serialize)]
pub struct RecordWalkConfig {
    /// Digits `ε_k` of the base point `t_0`.
    pub base_bits: Vec<bool>,
    /// Truncation depth of the main trace.
    pub depth: usize,
    pub steps: usize,
    /// The height bound `M` in the side condition `Σ H(g_k) ≤ 2Mn`.
    pub m_bound: f64,
    pub options: ExactOptions,
}

/// The step law of a record walk: levels `l_1, …, l_J` and address positions `i_1, …, i_J`.
pub fn record_walk_law(
    dim: usize,
    kappa: Kappa,
    mix_weight: f64,
    levels: &[u64],
    indices: &[u64],
    depth: usize,
) -> Result<MatrixLawSpec> {
    if levels.is_empty() || levels.len() != indices.len() {
        return Err(Error::invalid("need one address position per level"));
    }
    let law = MatrixLawSpec {
        dim,
        kappa,
        scalar: ScalarLawSpec::simple_record_cube()
            .with_t_min(simple_record_t_min(levels.len() as u64)),
        mix_weight,
        shear: Some(DyadicAddress::new(indices.to_vec())?),
        symmetrize: false,
        level: Level::Finite { j: depth },
        diag_exponents: Some(levels.to_vec()),
    };
    law.validate()?;
    Ok(law)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SideConditions {
    pub n_at_least_two: bool,
    pub record_simple: bool,
    pub max_at_least_n_squared: bool,
    pub generator_heights_bounded: bool,
}

impl SideConditions {
    pub fn all(&self) -> bool {
        self.n_at_least_two
            && self.record_simple
            && self.max_at_least_n_squared
            && self.generator_heights_bounded
    }
}

/// The record check at one time `n`.
#[derive(Clone, Debug, Serialize)]
pub struct RecordCheck {
    pub n: usize,
    /// `max_{k≤n} j_k`, i.e. `j + 1`.
    pub record: usize,
    pub side: SideConditions,
    /// Results below are present only when every side condition holds.
    pub depth: Option<usize>,
    /// `l_{j+1}/3`.
    pub claimed: Option<f64>,
    pub neg_log_delta: Option<f64>,
    pub claim_holds: Option<bool>,
    /// Height certificate for the truncated walk.
    pub systole_certificate: Option<Certificate>,
    pub systole_certificate_holds: Option<bool>,
    /// `δ(deep truncation) / δ(depth j)`.
    pub truncation_ratio: Option<f64>,
    pub ratio_at_most_two: Option<bool>,
    /// The perturbation inequalities between the two truncations, `h_0` included as a factor.
    pub perturbation: Option<PerturbedPairCheck>,
}

impl RecordCheck {
    pub fn verified(&self) -> bool {
        self.side.all()
    }

    pub fn passed(&self) -> bool {
        self.claim_holds == Some(true)
            && self.ratio_at_most_two == Some(true)
            && self.systole_certificate_holds != Some(false)
            && self.perturbation.as_ref().is_none_or(|p| p.holds())
    }
}

#[derive(Clone, Debug)]
pub struct ShearWalk {
    pub trace: WalkTrace,
    /// `t_0` truncated to the main depth.
    pub base_t: BigRational,
    pub driving: Vec<usize>,
    pub records: Vec<RecordCheck>,
    /// Last record-escape certificate that passed.
    pub certificate: Option<Certificate>,
}

impl ShearWalk {
    pub fn verified(&self) -> impl Iterator<Item = &RecordCheck> {
        self.records.iter().filter(|r| r.verified())
    }

    /// Every verified record time passed and the certified values never decrease.
    pub fn monotone_certified_escape(&self) -> bool {
        let mut last = f64::NEG_INFINITY;
        for r in self.verified() {
            let c = r.claimed.unwrap_or(f64::NEG_INFINITY);
            if !r.passed() || c < last {
                return false;
            }
            last = c;
        }
        true
    }

    pub fn base_t_string(&self) -> String {
        format_rational(&self.base_t)
    }
}

fn driving_integer(step: &StepDescriptor) -> usize {
    match &step.core {
        Core::Diag(d) => d
            .value
            .exact_exponent
            .as_ref()
            .and_then(|j| j.to_usize())
            .unwrap_or(0),
        _ => 0,
    }
}

fn generator_height(step: &StepDescriptor, law: &PreparedLaw) -> f64 {
    match &step.core {
        Core::Generator(i) => law.generator_heights[*i],
        Core::Sampled(_, h) => *h,
        Core::Diag(_) => 0.0,
    }
}

fn at_depth(step: &StepDescriptor, address: &DyadicAddress, depth: usize) -> StepDescriptor {
    let mut s = step.clone();
    s.shear_t = address.value(&s.seeds.bits, depth);
    s
}

/// Exact walk from `N_{t_0}·Z^d` with `t_0` truncated to `cfg.depth` digits, and the
/// record check at every step.
///
/// The untruncated address is represented by its full stored length.
pub fn run_walk_from_shear<R: RngCore + ?Sized>(
    law: &MatrixLawSpec,
    cfg: &RecordWalkConfig,
    rng: &mut R,
) -> Result<ShearWalk> {
    let address = law
        .shear
        .clone()
        .ok_or_else(|| Error::invalid("record walk needs a shear address"))?;
    let levels = law
        .diag_exponents
        .clone()
        .ok_or_else(|| Error::invalid("record walk needs a level table"))?;
    let full = address.indices.len();
    if cfg.depth > full || cfg.base_bits.len() < full {
        return Err(Error::invalid(
            "base digits or depth do not match the address",
        ));
    }
    let mut spec = law.clone();
    spec.level = Level::Finite { j: cfg.depth };
    let prepared = spec.prepare()?;
    let steps = (0..cfg.steps)
        .map(|_| sample_step(&prepared, rng))
        .collect::<Result<Vec<_>>>()?;
    let dim = spec.dim;
    let base_t = address.value(&cfg.base_bits, cfg.depth);
    let base = LatticeBasis::new(RationalMatrix::shear(dim, base_t.clone()))?;
    let trace = exact_walk_from_steps(&prepared, steps.clone(), &base, cfg.options)?;
    let done = trace.len();

    let driving: Vec<usize> = steps.iter().map(driving_integer).collect();
    let mut records = Vec::with_capacity(done);
    let mut gen_sum = 0.0;
    let mut certificate = None;
    for n in 1..=done {
        gen_sum += generator_height(&steps[n - 1], &prepared);
        let record = driving[..n].iter().copied().max().unwrap_or(0);
        let side = SideConditions {
            n_at_least_two: n >= 2,
            record_simple: record > 0 && driving[..n].iter().filter(|&&j| j == record).count() == 1,
            max_at_least_n_squared: record >= n * n,
            generator_heights_bounded: gen_sum <= 2.0 * cfg.m_bound * n as f64,
        };
        let mut check = RecordCheck {
            n,
            record,
            side,
            depth: None,
            claimed: None,
            neg_log_delta: None,
            claim_holds: None,
            systole_certificate: None,
            systole_certificate_holds: None,
            truncation_ratio: None,
            ratio_at_most_two: None,
            perturbation: None,
        };
        if side.all() {
            evaluate_record(
                &mut check,
                &steps[..n],
                &prepared,
                &address,
                &levels,
                &cfg.base_bits,
                cfg.options,
            )?;
            if check.passed() {
                certificate = Some(Certificate {
                    kind: CertificateKind::RecordEscape,
                    value: check.claimed.expect("evaluated"),
                    log_value: check.claimed.map(f64::ln),
                    valid_at: n,
                });
            }
        }
        records.push(check);
    }
    Ok(ShearWalk {
        trace,
        base_t,
        driving,
        records,
        certificate,
    })
}

fn realize_at(
    steps: &[StepDescriptor],
    law: &PreparedLaw,
    address: &DyadicAddress,
    base_bits: &[bool],
    depth: usize,
    budget: u64,
) -> Result<(Vec<StepDescriptor>, Vec<RationalMatrix>)> {
    let descs: Vec<StepDescriptor> = steps.iter().map(|s| at_depth(s, address, depth)).collect();
    let mut mats = descs
        .iter()
        .map(|s| realize_step_matrix(s, law, budget))
        .collect::<Result<Vec<_>>>()?;
    mats.push(RationalMatrix::shear(
        law.spec.dim,
        address.value(base_bits, depth),
    ));
    Ok((descs, mats))
}

fn evaluate_record(
    check: &mut RecordCheck,
    steps: &[StepDescriptor],
    law: &PreparedLaw,
    address: &DyadicAddress,
    levels: &[u64],
    base_bits: &[bool],
    opts: ExactOptions,
) -> Result<()> {
    let dim = law.spec.dim;
    let depth = check.record - 1;
    let full = address.indices.len();
    let claimed = levels[check.record - 1] as f64 / 3.0;
    let (descs, trunc) = realize_at(steps, law, address, base_bits, depth, opts.bit_budget)?;
    let (_, deep) = realize_at(steps, law, address, base_bits, full, opts.bit_budget)?;
    let product = |ms: &[RationalMatrix]| -> Result<RationalMatrix> {
        ms.iter().try_fold(RationalMatrix::identity(dim), |acc, g| {
            acc.mul_with_budget(g, opts.bit_budget)
        })
    };
    let standard = LatticeBasis::standard(dim);
    let s_trunc = systole_sq_with_budget(&standard.transform(&product(&trunc)?)?, opts.bit_budget)?;
    let s_deep = systole_sq_with_budget(&standard.transform(&product(&deep)?)?, opts.bit_budget)?;

    let mut factors: Vec<_> = descs.iter().flat_map(|s| step_factors(s, law)).collect();
    factors.push(shear_factor(&address.value(base_bits, depth)));
    let cert = certificate_from_factors(&factors, check.n);

    check.depth = Some(depth);
    check.claimed = Some(claimed);
    check.neg_log_delta = Some(s_trunc.neg_log_delta.mid_f64());
    // l/3 rounded up keeps the comparison one-sided
    check.claim_holds = Some(neg_log_at_least(&s_trunc.delta_sq, claimed.next_up()));
    check.systole_certificate_holds = cert
        .as_ref()
        .map(|c| neg_log_at_least(&s_trunc.delta_sq, c.value));
    check.systole_certificate = cert;
    let ratio_sq = &s_deep.delta_sq / &s_trunc.delta_sq;
    check.truncation_ratio = ratio_sq.to_f64().map(f64::sqrt);
    check.ratio_at_most_two = Some(ratio_sq <= BigRational::from_integer(BigInt::from(4)));
    check.perturbation = Some(check_perturbed_pair(&trunc, &deep, &standard)?);
    Ok(())
}
