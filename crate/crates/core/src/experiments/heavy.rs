//! Heavy records of `t ↦ exp(t^-2)`: `max/Σ → 1`, read as `log Σ − log max → 0`.

use super::{
    max_n, run_trials, ExperimentConfig, ExperimentReport, Proportion, TrialSummary, Verdict,
};
use crate::error::Result;
use crate::laws::uniform_open0;

/// Separates the perturbation stream from the value stream.
const NOISE_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// Running `log Σ e^{x_k} − max x_k`, kept as `ln(1 + rest)` with `rest` relative to the max.
#[derive(Clone, Copy, Debug)]
struct GapAccumulator {
    max: f64,
    rest: f64,
}

impl GapAccumulator {
    fn new() -> Self {
        GapAccumulator {
            max: f64::NEG_INFINITY,
            rest: 0.0,
        }
    }

    fn push(&mut self, x: f64) {
        if x > self.max {
            if self.max > f64::NEG_INFINITY {
                self.rest = (self.rest + 1.0) * (self.max - x).exp();
            }
            self.max = x;
        } else {
            self.rest += (x - self.max).exp();
        }
    }

    fn gap(&self) -> f64 {
        self.rest.ln_1p()
    }
}

/// `log Σ e^{x_k} − max x_k` for log-values `x_k`.
pub fn log_gap(logs: &[f64]) -> f64 {
    let mut acc = GapAccumulator::new();
    for &x in logs {
        acc.push(x);
    }
    acc.gap()
}

/// `ln(e^x + u)` for `u ∈ [0, 1]`.
fn log_add_uniform(x: f64, u: f64) -> f64 {
    if x > 0.0 {
        x + (u * (-x).exp()).ln_1p()
    } else {
        (x.exp() + u).ln()
    }
}

pub fn verify_heavy_records(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let n_max = max_n(cfg)?;
    let mut grid = cfg.n_grid.clone();
    grid.sort_unstable();
    grid.dedup();
    let tol = cfg.thresholds.tolerance;
    let stability = cfg.stability;
    let trials = run_trials(cfg, 0, |k, rng| {
        let mut noise = crate::laws::trial_rng(cfg.master_seed ^ NOISE_SALT, k);
        let mut plain = GapAccumulator::new();
        let mut perturbed = GapAccumulator::new();
        let mut out = TrialSummary::new(k);
        let mut next = grid.iter().peekable();
        for i in 1..=n_max {
            let t = uniform_open0(rng);
            let x = t.powi(-2);
            plain.push(x);
            if stability {
                perturbed.push(log_add_uniform(x, uniform_open0(&mut noise)));
            }
            if next.peek() == Some(&&i) {
                next.next();
                out.set(format!("gap_{i}"), Some(plain.gap()));
                if stability {
                    out.set(format!("gap_perturbed_{i}"), Some(perturbed.gap()));
                }
            }
        }
        Ok(out)
    })?;

    let mut report = ExperimentReport::new(cfg);
    let conf = cfg.thresholds.confidence;
    let count = |key: &str| {
        trials
            .iter()
            .filter(|t| t.get(key).is_some_and(|g| g <= tol))
            .count() as u64
    };
    for &n in &grid {
        report.aggregates.push(Proportion::new(
            "heavy",
            Some(n),
            count(&format!("gap_{n}")),
            cfg.trials,
            conf,
        ));
        if stability {
            report.aggregates.push(Proportion::new(
                "heavy_perturbed",
                Some(n),
                count(&format!("gap_perturbed_{n}")),
                cfg.trials,
                conf,
            ));
        }
    }
    let last = report
        .aggregate("heavy", Some(n_max))
        .expect("present")
        .estimate;
    report.verdicts.push(Verdict::at_least(
        format!("heavy records: log Σ − log max <= {tol} at n = {n_max}"),
        last,
        cfg.thresholds.min_fraction,
    ));
    if stability {
        let pert = report
            .aggregate("heavy_perturbed", Some(n_max))
            .expect("present")
            .estimate;
        report.verdicts.push(Verdict::at_most(
            "heavy records survive a bounded perturbation".to_string(),
            (pert - last).abs(),
            cfg.thresholds.stability_delta,
        ));
    }
    report.counters.trials_run = cfg.trials;
    report.counters.steps = cfg.trials * n_max;
    if cfg.store_trials {
        report.trials = trials;
    }
    Ok(report)
}
