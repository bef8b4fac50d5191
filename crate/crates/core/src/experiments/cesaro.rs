//! Window averages of escape probabilities along the dyadic approximations.
//!
//! Level `j` walks use steps `(N_{l_j(k)} γ)^{±1}`, with `γ` the diagonal
//! `diag(2^a, 2^-a, 1, …)`, `a = ⌊t^-p⌋` and `t` uniform on `(0, 1/2]`, with
//! probability `1/2`, and a generator otherwise. At each
//! sampled `n ∈ [a_j, 2a_j]` the ledger certificate is compared with
//! `(2^p − 1) n^p − log 2`. The certificate is only a sufficient condition, so
//! `1 − q̂` bounds the occupation of `K_B` from above and never from below.

use num_traits::ToPrimitive;

use super::{
    run_trials, ExperimentConfig, ExperimentReport, Proportion, Refusal, TrialSummary, Verdict,
};
use crate::constants::{
    epsilon_p, escape_threshold_sequences, EpsilonMode, RealParam, SequenceTable, DEFAULT_MAX_BITS,
};
use crate::error::{Error, Result};
use crate::laws::{DyadicAddress, Kappa, Level, MatrixLawSpec, ScalarLawSpec};
use crate::walk::run_ledger_walk;

fn sequences(cfg: &ExperimentConfig) -> Result<SequenceTable> {
    let eps = match cfg.epsilon_mode {
        EpsilonMode::Empirical => RealParam::from_f64(cfg.epsilon_hat),
        EpsilonMode::PaperFaithful => RealParam::Enclosure(epsilon_p(cfg.p, 128)?.epsilon_p),
    };
    escape_threshold_sequences(
        cfg.p,
        cfg.p_prime,
        &RealParam::from_f64(cfg.m),
        &RealParam::from_f64(cfg.m_prime),
        &eps,
        cfg.epsilon_mode,
        cfg.j_max,
        DEFAULT_MAX_BITS,
    )
}

/// The level-`j` step law for the address positions `indices = (i_1, …, i_j)`.
pub(crate) fn level_law(cfg: &ExperimentConfig, indices: &[u64]) -> Result<MatrixLawSpec> {
    let law = MatrixLawSpec {
        dim: cfg.dim,
        kappa: Kappa::default_generators(cfg.dim),
        scalar: ScalarLawSpec::power_floor(cfg.p, 0.5),
        mix_weight: 0.5,
        shear: Some(DyadicAddress::new(indices.to_vec())?),
        symmetrize: true,
        level: Level::Finite { j: indices.len() },
        diag_exponents: None,
    };
    law.validate()?;
    Ok(law)
}

/// Evenly spaced integers covering `[lo, hi]`, endpoints included.
fn window(lo: u64, hi: u64, points: u64) -> Vec<u64> {
    let points = points.max(2).min(hi - lo + 1);
    let mut out: Vec<u64> = (0..points)
        .map(|k| lo + ((hi - lo) as u128 * k as u128 / (points - 1).max(1) as u128) as u64)
        .collect();
    out.dedup();
    out
}

pub fn cesaro_escape_bound(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let table = sequences(cfg)?;
    let mut report = ExperimentReport::new(cfg);
    let mode = match cfg.epsilon_mode {
        EpsilonMode::Empirical => format!("empirical ε̂ = {}", cfg.epsilon_hat),
        EpsilonMode::PaperFaithful => "pipeline ε_p".to_string(),
    };
    report.notes.push(format!("sequences in {mode} mode"));
    report.notes.push(
        "the certificate event is sufficient for escape, so 1 − q̂ only bounds K_B occupation from above"
            .into(),
    );
    report.notes.extend(table.warnings.iter().cloned());
    if (table.rows.len() as u64) < cfg.j_max {
        return Err(Error::invalid(format!(
            "sequence table stops at j = {} (bit cap), below j_max = {}",
            table.rows.len(),
            cfg.j_max
        )));
    }
    let p = cfg.p;
    let ln2 = std::f64::consts::LN_2;
    let conf = cfg.thresholds.confidence;
    let mut all: Vec<TrialSummary> = Vec::new();
    for j in cfg.j_min..=cfg.j_max {
        let row = &table.rows[(j - 1) as usize];
        let a = match row
            .value
            .to_u64()
            .filter(|a| a.saturating_mul(2) <= cfg.max_steps)
        {
            Some(a) => a,
            None => {
                report.refusal = Some(Refusal {
                    reason: format!("window [a_{j}, 2a_{j}] exceeds the step budget"),
                    required_n: (&row.value * 2u32).to_string(),
                    max_steps: cfg.max_steps,
                });
                break;
            }
        };
        let indices = table.rows[..j as usize]
            .iter()
            .map(|r| {
                r.i.to_u64()
                    .ok_or_else(|| Error::invalid("address index overflow"))
            })
            .collect::<Result<Vec<_>>>()?;
        let law = level_law(cfg, &indices)?;
        let times = window(a, 2 * a, cfg.window_points);
        let thresholds: Vec<f64> = times
            .iter()
            .map(|&n| (2f64.powf(p) - 1.0) * (n as f64).powf(p) - ln2)
            .collect();
        let salt = j.wrapping_mul(0xa076_1d64_78bd_642f);
        let hits = run_trials(cfg, salt, |_, rng| {
            let trace = run_ledger_walk(&law, (2 * a) as usize, rng)?;
            Ok(times
                .iter()
                .zip(&thresholds)
                .map(|(&n, &th)| {
                    trace.certificates[(n - 1) as usize]
                        .as_ref()
                        .is_some_and(|c| c.exceeds(th))
                })
                .collect::<Vec<bool>>())
        })?;
        let mut window_mean = 0.0;
        let mut window_lower = 0.0;
        for (g, &n) in times.iter().enumerate() {
            // a time whose threshold does not clear B says nothing about K_B
            let count = if thresholds[g] > cfg.compact_b {
                hits.iter().filter(|h| h[g]).count() as u64
            } else {
                0
            };
            let q = Proportion::new(format!("escape_j{j}"), Some(n), count, cfg.trials, conf);
            window_mean += q.estimate;
            window_lower += q.ci_low;
            report.aggregates.push(q);
        }
        let w = times.len() as f64;
        let (window_mean, window_lower) = (window_mean / w, window_lower / w);
        let vacuous = thresholds.iter().all(|&th| th <= cfg.compact_b);
        report.scalars.insert(format!("a_{j}"), a as f64);
        report
            .scalars
            .insert(format!("window_mean_q_j{j}"), window_mean);
        report
            .scalars
            .insert(format!("occupation_upper_j{j}"), 1.0 - window_mean);
        report
            .scalars
            .insert(format!("occupation_upper_ci_j{j}"), 1.0 - window_lower);
        if vacuous {
            report.notes.push(format!(
                "j = {j}: B = {} exceeds every threshold in the window, the occupation bound is vacuous",
                cfg.compact_b
            ));
        }
        report.verdicts.push(Verdict::at_most(
            format!(
                "window average over [a_{j}, 2a_{j}] of P(walk in K_B) ≤ 1 − target (upper confidence bound)"
            ),
            1.0 - window_lower,
            1.0 - cfg.target,
        ));
        report.counters.trials_run += cfg.trials;
        report.counters.steps += cfg.trials * 2 * a;
        if cfg.store_trials {
            all.extend(hits.into_iter().enumerate().map(|(k, h)| {
                let mut s = TrialSummary::new(k as u64);
                s.set("j", Some(j as f64));
                // columns are window positions so that every level shares them
                for (g, hit) in h.into_iter().enumerate() {
                    s.set(format!("hit_{g:02}"), Some(hit as u8 as f64));
                }
                s
            }));
        }
    }
    report.trials = all;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn windows_cover_endpoints() {
        assert_eq!(
            window(82, 164, 9),
            vec![82, 92, 102, 112, 123, 133, 143, 153, 164]
        );
        assert_eq!(window(5, 6, 9), vec![5, 6]);
    }
}
