//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.
//!
//! Runs without the libtest harness so the lines are always printed.

use std::process::ExitCode;
use std::time::Instant;

use escape_core::constants::*;
use escape_core::experiments::*;
use escape_core::lattice::{brute_force_systole_sq, certified_radius, systole_sq, LatticeBasis};
use escape_core::laws::{
    realize_step_matrix, sample_step, trial_rng, MatrixLawSpec, ScalarLawSpec,
};
use escape_core::ratmat::{random_unimodular, spectral_norm_enclosure, RationalMatrix};
use escape_core::walk::{check_perturbed_pair, perturbed_steps, run_exact_walk, ExactOptions};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;

const BIT_BUDGET: u64 = 1 << 22;

// epsilon_p(2.0, 64), frozen on first run
const ALPHA_LO: &str = "105654726275747968709*2^-129";
const ALPHA_HI: &str = "105654726275747968711*2^-129";
const A2_LO: &str = "230125877559161743309*2^-68";
const A2_HI: &str = "115062938779580871655*2^-67";
const EPS_LO: &str = "107596606840712255089*2^-138";
const EPS_HI: &str = "26899151710178063773*2^-136";
const K: u64 = 49;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn random_basis(salt: u64, k: u64, dim: usize) -> LatticeBasis {
    LatticeBasis::new(random_unimodular(&mut trial_rng(salt, k), dim, 50)).unwrap()
}

/// Capped heavy-record law: diagonal exponents at most 2^10.
fn capped_law() -> MatrixLawSpec {
    let t_min = 1.0 / (1024f64.ln()).sqrt();
    MatrixLawSpec::mixed(
        2,
        ScalarLawSpec::heavy_record_exp().with_t_min(t_min.next_up()),
    )
}

fn preset(name: ExperimentName, overrides: &[(&str, &str)]) -> ExperimentConfig {
    let o: Vec<(String, String)> = overrides
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    ExperimentConfig::preset(name).with_overrides(&o).unwrap()
}

fn num(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-3 {
        format!("{x:.6e}")
    } else {
        format!("{x:.6}")
    }
}

fn verdict_line(r: &ExperimentReport) -> String {
    r.verdicts
        .iter()
        .map(|v| {
            format!(
                "[{}] {} (statistic {}, bound {})",
                if v.passed { "ok" } else { "FAILED" },
                v.claim,
                num(v.statistic),
                num(v.bound)
            )
        })
        .collect::<Vec<_>>()
        .join("; ")
}

fn systole_oracle() -> Outcome {
    let oracle = |b: &LatticeBasis| {
        let m = b.matrix();
        let col_min = (0..m.dim())
            .map(|j| m.column(j).iter().map(|x| x * x).sum::<BigRational>())
            .min()
            .unwrap();
        let warm = brute_force_systole_sq(b, 2).unwrap().min(col_min);
        brute_force_systole_sq(b, certified_radius(b, &warm).unwrap()).unwrap()
    };
    let cases: Vec<(u64, usize)> = (0..500)
        .map(|k| (k, 2))
        .chain((0..100).map(|k| (k, 3)))
        .collect();
    let bad = cases
        .par_iter()
        .filter(|&&(k, dim)| {
            let b = random_basis(0xA1 + dim as u64, k, dim);
            systole_sq(&b).unwrap().delta_sq != oracle(&b)
        })
        .count();
    outcome(
        bad == 0,
        format!("{} of {} bases disagree", bad, cases.len()),
    )
}

fn lattice_bounds() -> Outcome {
    let sandwich = (0..1000u64)
        .into_par_iter()
        .filter(|&k| {
            let dim = 2 + (k % 2) as usize;
            let g = random_unimodular(&mut trial_rng(0xB1, k), dim, 20);
            let b = random_basis(0xB2, k, dim);
            let d0 = systole_sq(&b).unwrap().delta_sq;
            let d1 = systole_sq(&b.transform(&g).unwrap()).unwrap().delta_sq;
            let n = spectral_norm_enclosure(&g, 64).unwrap().upper.to_rational();
            let ni = spectral_norm_enclosure(&g.inverse().unwrap(), 64)
                .unwrap()
                .upper
                .to_rational();
            !(d1 <= &n * &n * &d0 && &d1 * &ni * &ni >= d0)
        })
        .count();
    let membership = (0..1000u64)
        .into_par_iter()
        .filter(|&k| {
            let dim = 2 + (k % 3) as usize;
            let g = random_unimodular(&mut trial_rng(0xB3, k), dim, 50);
            let inv = g.inverse().unwrap();
            let qp = BigRational::from_integer(BigInt::from(inv.denominator_lcm()));
            let integral = (0..dim).all(|i| {
                let mut e = vec![BigRational::zero(); dim];
                e[i] = qp.clone();
                inv.mul_vec(&e).iter().all(|x| x.is_integer())
            });
            let d = systole_sq(&LatticeBasis::new(g).unwrap()).unwrap().delta_sq;
            !(integral && d <= &qp * &qp)
        })
        .count();
    outcome(
        sandwich == 0 && membership == 0,
        format!("sandwich violations {sandwich}/1000, membership violations {membership}/1000"),
    )
}

fn systole_certificate() -> Outcome {
    let rows: Vec<(usize, bool, bool)> = (0..200u64)
        .into_par_iter()
        .map(|seed| {
            let n = 10 + (seed % 41) as usize;
            let t = run_exact_walk(
                &capped_law(),
                n,
                &LatticeBasis::standard(2),
                &mut trial_rng(0xC1, seed),
                ExactOptions {
                    both_orders: false,
                    bit_budget: BIT_BUDGET,
                },
            )
            .unwrap();
            (
                t.certificate_violations().len(),
                t.steps.iter().any(|s| s.is_diag()),
                t.aborted.is_some(),
            )
        })
        .collect();
    let violations: usize = rows.iter().map(|r| r.0).sum();
    let with_diag = rows.iter().filter(|r| r.1).count();
    let aborted = rows.iter().filter(|r| r.2).count();
    outcome(
        violations == 0 && with_diag == rows.len() && aborted == 0,
        format!(
            "{violations} violations over 200 walks; {with_diag} contain diagonal steps, {aborted} hit the bit budget"
        ),
    )
}

fn perturbation() -> Outcome {
    let law = capped_law().prepare().unwrap();
    let bad = (0..200u64)
        .into_par_iter()
        .filter(|&k| {
            let tau = if k % 2 == 0 {
                2f64.powi(-10)
            } else {
                2f64.powi(-20)
            };
            let mut rng = trial_rng(0xD1, k);
            let n = 1 + (k / 2 % 12) as usize;
            let steps: Vec<_> = (0..n)
                .map(|_| sample_step(&law, &mut rng).unwrap())
                .collect();
            let pert = perturbed_steps(&steps, tau, &mut rng);
            let real = |ss: &[_]| -> Vec<RationalMatrix> {
                ss.iter()
                    .map(|s| realize_step_matrix(s, &law, BIT_BUDGET).unwrap())
                    .collect()
            };
            let c = check_perturbed_pair(&real(&steps), &real(&pert), &LatticeBasis::standard(2))
                .unwrap();
            !(c.holds() && c.tau <= tau)
        })
        .count();
    outcome(bad == 0, format!("{bad} of 200 pairs violate a bound"))
}

fn constants_pipeline() -> Outcome {
    let e = epsilon_p(2.0, 64).unwrap();
    let fine = epsilon_p(2.0, 128).unwrap();
    let pins = [
        (e.alpha.lo().to_exact_string(), ALPHA_LO),
        (e.alpha.hi().to_exact_string(), ALPHA_HI),
        (e.a_p.lo().to_exact_string(), A2_LO),
        (e.a_p.hi().to_exact_string(), A2_HI),
        (e.epsilon_p.lo().to_exact_string(), EPS_LO),
        (e.epsilon_p.hi().to_exact_string(), EPS_HI),
    ];
    let pinned = pins.iter().filter(|(got, want)| got == want).count();
    let nested = fine.alpha.is_subset_of(&e.alpha)
        && fine.a_p.is_subset_of(&e.a_p)
        && fine.epsilon_p.is_subset_of(&e.epsilon_p)
        && fine.k == e.k;
    let a2 = (std::f64::consts::PI.powi(2) / 6.0).powf(-0.5);
    let a2_ok = (e.a_p.mid_f64() - a2).abs() <= 1e-9;
    let minimal = e.k == K && k_is_minimal(&e.alpha, e.k).unwrap();
    outcome(
        pinned == pins.len() && nested && a2_ok && minimal,
        format!(
            "{pinned}/{} golden endpoints, nested {nested}, a_2 within 1e-9 {a2_ok}, K = {} minimal {minimal}, eps_2 lower {:.13e}",
            pins.len(),
            e.k,
            fine.epsilon_p.lo().to_f64()
        ),
    )
}

fn sequence_tables() -> Outcome {
    let one = RealParam::from_f64(1.0);
    let eps = RealParam::Exact(BigRational::new(1.into(), 20.into()));
    let esc = escape_threshold_sequences(
        2.0,
        0.5,
        &one,
        &one,
        &eps,
        EpsilonMode::Empirical,
        5,
        DEFAULT_MAX_BITS,
    )
    .unwrap();
    let rec = record_level_sequences(&one, 5, DEFAULT_MAX_BITS).unwrap();
    let sharp = |t: &SequenceTable| {
        t.rows[1..].iter().all(|r| {
            r.i_check.decrement == Decrement::Fails && r.value_check.decrement == Decrement::Fails
        })
    };
    let first = rec.rows[0].value == BigInt::from(1) && rec.rows[0].i == BigInt::from(1);
    let ok = esc.rows.len() == 5
        && rec.rows.len() == 5
        && esc.all_verified()
        && rec.all_verified()
        && sharp(&esc)
        && sharp(&rec)
        && first;
    outcome(
        ok,
        format!(
            "thresholds a_j = [{}]; levels l_j = [{}], i_j = [{}]",
            esc.rows
                .iter()
                .map(|r| r.value.to_string())
                .take(2)
                .chain(std::iter::once("...".to_string()))
                .collect::<Vec<_>>()
                .join(", "),
            rec.rows
                .iter()
                .map(|r| r.value.to_string())
                .collect::<Vec<_>>()
                .join(", "),
            rec.rows
                .iter()
                .map(|r| r.i.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        ),
    )
}

fn experiment(cfg: &ExperimentConfig) -> Outcome {
    let r = run_experiment(cfg).unwrap();
    outcome(r.passed(), verdict_line(&r))
}

fn escape_probability() -> Outcome {
    let r = run_experiment(&ExperimentConfig::preset(ExperimentName::EscapeProbability)).unwrap();
    let floor = r
        .aggregates
        .iter()
        .map(|a| a.estimate)
        .fold(f64::INFINITY, f64::min);
    outcome(
        r.passed() && floor > 0.001,
        format!("{}; smallest q_n {floor:.4}", verdict_line(&r)),
    )
}

fn full_escape() -> Outcome {
    let ledger = run_experiment(&ExperimentConfig::preset(ExperimentName::FullEscape)).unwrap();
    let exact = run_experiment(&preset(
        ExperimentName::FullEscape,
        &[("engine", "exact"), ("trials", "20"), ("n_grid", "[50]")],
    ))
    .unwrap();
    outcome(
        ledger.passed() && exact.passed(),
        format!(
            "ledger: {}; exact: {}",
            verdict_line(&ledger),
            verdict_line(&exact)
        ),
    )
}

fn divergence() -> Outcome {
    let r = run_experiment(&ExperimentConfig::preset(ExperimentName::DivergenceFromS)).unwrap();
    let seeds = r.scalars.get("seeds_with_verified_times").copied();
    let times = r.scalars.get("verified_times").copied();
    outcome(
        r.passed(),
        format!(
            "{}; verified record times {times:?} over {seeds:?} seeds",
            verdict_line(&r)
        ),
    )
}

fn reproducibility() -> Outcome {
    let mut diffs = Vec::new();
    for (name, overrides) in [
        (ExperimentName::HeavyRecords, vec![]),
        (
            ExperimentName::SimpleRecords,
            vec![("trials", "2000"), ("n_grid", "[10, 1000]")],
        ),
        (ExperimentName::Cesaro, vec![("trials", "200")]),
    ] {
        let mut a = overrides.clone();
        a.push(("threads", "1"));
        let mut b = overrides;
        b.push(("threads", "3"));
        let ra = run_experiment(&preset(name, &a)).unwrap();
        let rb = run_experiment(&preset(name, &b)).unwrap();
        let same = ra.aggregates == rb.aggregates
            && ra.scalars == rb.scalars
            && ra.trials == rb.trials
            && serde_json::to_string(&ra.aggregates).unwrap()
                == serde_json::to_string(&rb.aggregates).unwrap();
        if !same {
            diffs.push(name.as_str());
        }
    }
    outcome(
        diffs.is_empty(),
        format!("3 experiments re-run on 1 and 3 threads; differing: {diffs:?}"),
    )
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 12] = [
        ("systole oracle", systole_oracle),
        ("expansion and membership bounds", lattice_bounds),
        ("systole certificate on exact walks", systole_certificate),
        ("perturbed pairs", perturbation),
        ("constants pipeline", constants_pipeline),
        ("sequence tables", sequence_tables),
        ("heavy records", || {
            experiment(&ExperimentConfig::preset(ExperimentName::HeavyRecords))
        }),
        ("escape probability", escape_probability),
        ("simple records", || {
            experiment(&ExperimentConfig::preset(ExperimentName::SimpleRecords))
        }),
        ("full escape", full_escape),
        ("divergence from S", divergence),
        ("reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        failed += !o.passed as usize;
        println!(
            "{} {:>2} {name} ({:.1} s): {}",
            if o.passed { "PASS" } else { "FAIL" },
            i + 1,
            start.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", 12 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
