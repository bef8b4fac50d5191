//! Simple records of `t ↦ ⌊t^-3⌋`: the maximum is at least `n²` and is reached once.

use rand::RngCore;

use super::{
    max_n, run_trials, ExperimentConfig, ExperimentReport, Proportion, TrialSummary, Verdict,
};
use crate::error::Result;
use crate::laws::uniform_open0;

/// `(max < n², max reached at least twice)` at every `n` of `grid` (sorted).
pub fn record_indicators<R: RngCore + ?Sized>(rng: &mut R, grid: &[u64]) -> Vec<(bool, bool)> {
    let n_max = grid.last().copied().unwrap_or(0);
    let (mut max, mut count) = (0.0f64, 0u64);
    let mut out = Vec::with_capacity(grid.len());
    let mut next = grid.iter().peekable();
    for i in 1..=n_max {
        let x = uniform_open0(rng).powi(-3).floor();
        if x > max {
            max = x;
            count = 1;
        } else if x == max {
            count += 1;
        }
        while next.peek() == Some(&&i) {
            next.next();
            let n = i as f64;
            out.push((max < n * n, count > 1));
        }
    }
    out
}

pub fn verify_simple_record(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    max_n(cfg)?;
    let mut grid = cfg.n_grid.clone();
    grid.sort_unstable();
    grid.dedup();
    let rows = run_trials(cfg, 0, |_, rng| Ok(record_indicators(rng, &grid)))?;
    let mut report = ExperimentReport::new(cfg);
    let conf = cfg.thresholds.confidence;
    let slack = cfg.thresholds.sigma_slack;
    for (g, &n) in grid.iter().enumerate() {
        let nf = n as f64;
        let small = rows.iter().filter(|r| r[g].0).count() as u64;
        let double = rows.iter().filter(|r| r[g].1).count() as u64;
        let tail = (-nf.cbrt()).exp();
        let small_bound = tail;
        let double_bound = 2.0 * nf.powf(-5.0 / 3.0) + tail;
        let p_small = Proportion::new("max_below_n_squared", Some(n), small, cfg.trials, conf);
        let p_double = Proportion::new("double_max", Some(n), double, cfg.trials, conf);
        // σ of the estimator at the bound itself
        report.verdicts.push(Verdict::at_most(
            format!("P(max_{{k≤n}} x_k < n²) ≤ exp(−n^{{1/3}}) at n = {n}"),
            p_small.estimate,
            small_bound + slack * p_small.sigma_at(small_bound.min(1.0)),
        ));
        report.verdicts.push(Verdict::at_most(
            format!("P(max reached more than once) ≤ 2n^{{-5/3}} + exp(−n^{{1/3}}) at n = {n}"),
            p_double.estimate,
            double_bound + slack * p_double.sigma_at(double_bound.min(1.0)),
        ));
        report.aggregates.push(p_small);
        report.aggregates.push(p_double);
    }
    report.counters.trials_run = cfg.trials;
    report.counters.steps = cfg.trials * grid.last().copied().unwrap_or(0);
    if cfg.store_trials {
        report.trials = rows
            .into_iter()
            .enumerate()
            .map(|(k, r)| {
                let mut s = TrialSummary::new(k as u64);
                for (n, (a, b)) in grid.iter().zip(r) {
                    s.set(format!("max_below_n_squared_{n}"), Some(a as u8 as f64));
                    s.set(format!("double_max_{n}"), Some(b as u8 as f64));
                }
                s
            })
            .collect();
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::trial_rng;

    #[test]
    fn single_value_is_never_a_double_max() {
        for seed in 0..200 {
            let r = record_indicators(&mut trial_rng(seed, 0), &[1]);
            assert!(!r[0].1);
        }
    }
}
