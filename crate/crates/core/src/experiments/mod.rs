//! Seeded Monte Carlo studies and end-to-end walk demos.
//!
//! Trial `k` of a run draws from [`trial_rng`]`(master_seed, k)`, so results do not depend
//! on scheduling. Verdicts are computed from the stored aggregates.

mod cesaro;
mod config;
mod demos;
mod escape;
mod heavy;
mod records;
mod stats;

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laws::{trial_rng, TrialRng};

pub use cesaro::cesaro_escape_bound;
pub use config::{Engine, ExperimentConfig, ExperimentName, Mixture, Thresholds};
pub use demos::{divergence_from_s_demo, full_escape_demo};
pub use escape::{escape_margins, estimate_escape_probability};
pub use heavy::{log_gap, verify_heavy_records};
pub use records::{record_indicators, verify_simple_record};
pub use stats::{wilson_interval, z_value, Proportion};

/// A pass/fail decision and the claim it stands in for.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub claim: String,
    pub statistic: f64,
    pub bound: f64,
    /// `statistic <= bound` when set, `statistic >= bound` otherwise.
    pub upper: bool,
    pub passed: bool,
}

impl Verdict {
    pub fn at_least(claim: impl Into<String>, statistic: f64, bound: f64) -> Self {
        Verdict {
            claim: claim.into(),
            statistic,
            bound,
            upper: false,
            passed: statistic >= bound,
        }
    }

    pub fn at_most(claim: impl Into<String>, statistic: f64, bound: f64) -> Self {
        Verdict {
            claim: claim.into(),
            statistic,
            bound,
            upper: true,
            passed: statistic <= bound,
        }
    }

    /// Re-derives `passed` from the stored numbers.
    pub fn recomputed(&self) -> bool {
        if self.upper {
            self.statistic <= self.bound
        } else {
            self.statistic >= self.bound
        }
    }
}

/// Named numbers of one trial; `None` marks an undefined quantity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trial: u64,
    pub values: BTreeMap<String, Option<f64>>,
}

impl TrialSummary {
    pub fn new(trial: u64) -> Self {
        TrialSummary {
            trial,
            values: BTreeMap::new(),
        }
    }

    pub fn set(&mut self, key: impl Into<String>, v: Option<f64>) {
        self.values.insert(key.into(), v.filter(|x| x.is_finite()));
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.values.get(key).copied().flatten()
    }
}

/// Counters that may differ between otherwise identical runs are kept apart from results.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Counters {
    pub wall_clock_ms: u128,
    pub trials_run: u64,
    pub steps: u64,
    pub budget_aborts: u64,
}

/// Why an operation declined to run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Refusal {
    pub reason: String,
    /// The walk length that would have been needed, in decimal.
    pub required_n: String,
    pub max_steps: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub aggregates: Vec<Proportion>,
    /// Further point values (window averages, counts, constants used).
    pub scalars: BTreeMap<String, f64>,
    pub verdicts: Vec<Verdict>,
    pub notes: Vec<String>,
    pub refusal: Option<Refusal>,
    pub trials: Vec<TrialSummary>,
    pub counters: Counters,
}

impl ExperimentReport {
    fn new(config: &ExperimentConfig) -> Self {
        ExperimentReport {
            config: config.clone(),
            aggregates: Vec::new(),
            scalars: BTreeMap::new(),
            verdicts: Vec::new(),
            notes: Vec::new(),
            refusal: None,
            trials: Vec::new(),
            counters: Counters::default(),
        }
    }

    /// All verdicts passed and none was skipped by a refusal.
    pub fn passed(&self) -> bool {
        self.refusal.is_none() && self.verdicts.iter().all(|v| v.passed)
    }

    /// Everything except the counters, serialized; equal runs give equal strings.
    pub fn results_fingerprint(&self) -> String {
        let mut r = self.clone();
        r.counters = Counters::default();
        serde_json::to_string(&r).expect("serializable report")
    }

    pub fn aggregate(&self, label: &str, n: Option<u64>) -> Option<&Proportion> {
        self.aggregates
            .iter()
            .find(|a| a.label == label && a.n == n)
    }

    /// Per-trial summaries as CSV rows (`trial` followed by the keys of the first trial).
    pub fn write_trials_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let io = |e: csv::Error| Error::invalid(format!("csv: {e}"));
        let mut w = csv::Writer::from_writer(out);
        let Some(first) = self.trials.first() else {
            return Ok(());
        };
        let keys: Vec<&String> = first.values.keys().collect();
        let mut header = vec!["trial".to_string()];
        header.extend(keys.iter().map(|k| k.to_string()));
        w.write_record(&header).map_err(io)?;
        for t in &self.trials {
            let mut row = vec![t.trial.to_string()];
            row.extend(
                keys.iter()
                    .map(|k| t.get(k).map(|v| v.to_string()).unwrap_or_default()),
            );
            w.write_record(&row).map_err(io)?;
        }
        w.flush().map_err(|e| Error::invalid(format!("csv: {e}")))?;
        Ok(())
    }
}

/// Runs `f` on trials `0..trials` with their own generators, in trial order.
pub(crate) fn run_trials<T, F>(cfg: &ExperimentConfig, salt: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, &mut TrialRng) -> Result<T> + Sync + Send,
{
    let work = || {
        (0..cfg.trials)
            .into_par_iter()
            .map(|k| f(k, &mut trial_rng(cfg.master_seed ^ salt, k)))
            .collect::<Result<Vec<T>>>()
    };
    match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    }
}

/// Dispatches on `cfg.name`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let start = Instant::now();
    let mut report = match cfg.name {
        ExperimentName::HeavyRecords => verify_heavy_records(cfg),
        ExperimentName::EscapeProbability => estimate_escape_probability(cfg),
        ExperimentName::Cesaro => cesaro_escape_bound(cfg),
        ExperimentName::SimpleRecords => verify_simple_record(cfg),
        ExperimentName::FullEscape => full_escape_demo(cfg),
        ExperimentName::DivergenceFromS => divergence_from_s_demo(cfg),
    }?;
    report.counters.wall_clock_ms = start.elapsed().as_millis();
    Ok(report)
}

pub(crate) fn max_n(cfg: &ExperimentConfig) -> Result<u64> {
    let n = cfg
        .n_grid
        .iter()
        .copied()
        .max()
        .ok_or_else(|| Error::invalid("n_grid is empty"))?;
    if n > cfg.max_steps {
        return Err(Error::invalid(format!(
            "n = {n} exceeds max_steps = {}",
            cfg.max_steps
        )));
    }
    Ok(n)
}
