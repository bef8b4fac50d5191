//! Experiment configuration. Every default lives in [`ExperimentConfig::preset`].

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::constants::EpsilonMode;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentName {
    HeavyRecords,
    EscapeProbability,
    Cesaro,
    SimpleRecords,
    FullEscape,
    DivergenceFromS,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 6] = [
        ExperimentName::HeavyRecords,
        ExperimentName::EscapeProbability,
        ExperimentName::Cesaro,
        ExperimentName::SimpleRecords,
        ExperimentName::FullEscape,
        ExperimentName::DivergenceFromS,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentName::HeavyRecords => "heavy_records",
            ExperimentName::EscapeProbability => "escape_probability",
            ExperimentName::Cesaro => "cesaro",
            ExperimentName::SimpleRecords => "simple_records",
            ExperimentName::FullEscape => "full_escape",
            ExperimentName::DivergenceFromS => "divergence_from_s",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown experiment name `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Ledger,
    Exact,
}

/// A bounded component of weight `1 − alpha` with values uniform on `[0, m_bound]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mixture {
    pub alpha: f64,
    pub m_bound: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    /// Heavy records: a trial passes when its log-gap is at most this.
    pub tolerance: f64,
    /// Heavy records: required passing fraction.
    pub min_fraction: f64,
    /// Heavy records: allowed change of the fraction under the bounded perturbation.
    pub stability_delta: f64,
    /// Confidence level of every Wilson interval.
    pub confidence: f64,
    /// Slack, in standard deviations, added to finite-n probability bounds.
    pub sigma_slack: f64,
    /// Full escape: the certificate must exceed this at the final step.
    pub certificate_threshold: f64,
    /// Full escape: required fraction of trials above `certificate_threshold`.
    pub pass_fraction: f64,
    /// Divergence demo: required fraction of seeds with monotone certified escape.
    pub monotone_fraction: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            tolerance: 1e-3,
            min_fraction: 0.98,
            stability_delta: 0.02,
            confidence: 0.95,
            sigma_slack: 3.0,
            certificate_threshold: 1e3,
            pass_fraction: 0.95,
            monotone_fraction: 0.9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: ExperimentName,
    pub master_seed: u64,
    pub trials: u64,
    /// Walk or sample lengths at which statistics are read off.
    pub n_grid: Vec<u64>,
    pub dim: usize,
    pub p: f64,
    pub p_prime: f64,
    pub mixture: Option<Mixture>,
    /// Heavy records: also run the perturbed variant.
    pub stability: bool,
    pub engine: Engine,
    pub epsilon_mode: EpsilonMode,
    /// Stand-in for `ε_p` in empirical mode.
    pub epsilon_hat: f64,
    /// Height bounds `M`, `M'` fed to the sequence tables.
    pub m: f64,
    pub m_prime: f64,
    /// Cesàro levels `j_min..=j_max`; divergence demo uses `j_max` levels.
    pub j_min: u64,
    pub j_max: u64,
    /// Cesàro: number of times sampled in each window `[a_j, 2a_j]`.
    pub window_points: u64,
    /// Cesàro: the compact set `K_B = {−log δ ≤ B}`.
    pub compact_b: f64,
    /// Cesàro: the window average of escape probabilities should reach this.
    pub target: f64,
    /// Exact full-escape mode: diagonal exponents are at most `2^exponent_cap_log2`.
    pub exponent_cap_log2: u32,
    /// Divergence demo: digits of the base points; an all-zero row is the control.
    pub addresses: Vec<Vec<bool>>,
    /// Walks longer than this are refused.
    pub max_steps: u64,
    /// Keep per-trial summaries in the report.
    pub store_trials: bool,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    pub thresholds: Thresholds,
}

impl ExperimentConfig {
    /// Default configuration of each experiment.
    pub fn preset(name: ExperimentName) -> Self {
        let base = ExperimentConfig {
            name,
            master_seed: 1,
            trials: 200,
            n_grid: vec![10_000],
            dim: 2,
            p: 2.0,
            p_prime: 0.5,
            mixture: None,
            stability: false,
            engine: Engine::Ledger,
            epsilon_mode: EpsilonMode::Empirical,
            epsilon_hat: 0.05,
            m: 1.0,
            m_prime: 1.0,
            j_min: 1,
            j_max: 1,
            window_points: 9,
            compact_b: 0.0,
            target: 0.0125,
            exponent_cap_log2: 10,
            addresses: Vec::new(),
            max_steps: 1_000_000,
            store_trials: true,
            threads: None,
            thresholds: Thresholds::default(),
        };
        match name {
            ExperimentName::HeavyRecords => ExperimentConfig {
                stability: true,
                ..base
            },
            ExperimentName::EscapeProbability => ExperimentConfig {
                trials: 100_000,
                n_grid: vec![10, 100, 1000],
                store_trials: false,
                ..base
            },
            ExperimentName::Cesaro => ExperimentConfig {
                trials: 2000,
                n_grid: Vec::new(),
                ..base
            },
            ExperimentName::SimpleRecords => ExperimentConfig {
                trials: 10_000,
                n_grid: vec![10, 100, 1000],
                store_trials: false,
                ..base
            },
            ExperimentName::FullEscape => ExperimentConfig {
                trials: 100,
                ..base
            },
            ExperimentName::DivergenceFromS => ExperimentConfig {
                trials: 10,
                n_grid: vec![8],
                engine: Engine::Exact,
                j_max: 4,
                addresses: vec![
                    vec![false, false, false, false],
                    vec![true, false, false, true],
                    vec![true, true, false, false],
                    vec![true, false, true, true],
                ],
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::invalid(m));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.n_grid.contains(&0) {
            return bad("n_grid entries must be positive".into());
        }
        if !(2..=crate::ratmat::MAX_DIM).contains(&self.dim) {
            return bad(format!("dim = {} is unsupported", self.dim));
        }
        if !(self.p > 1.0 && self.p.is_finite()) {
            return bad(format!("p = {} must exceed 1", self.p));
        }
        if !(self.p_prime > 0.0 && self.p_prime < 1.0) {
            return bad(format!("p_prime = {} must lie in (0, 1)", self.p_prime));
        }
        if let Some(m) = self.mixture {
            if !(m.alpha > 0.0 && m.alpha <= 1.0) || !(m.m_bound >= 0.0 && m.m_bound.is_finite()) {
                return bad("mixture needs alpha in (0, 1] and a finite bound M >= 0".into());
            }
        }
        if !(self.epsilon_hat > 0.0 && self.epsilon_hat < 1.0) {
            return bad("epsilon_hat must lie in (0, 1)".into());
        }
        if self.j_min == 0 || self.j_min > self.j_max {
            return bad("need 1 <= j_min <= j_max".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be positive".into());
        }
        let t = &self.thresholds;
        let positive = [
            ("tolerance", t.tolerance),
            ("min_fraction", t.min_fraction),
            ("stability_delta", t.stability_delta),
            ("confidence", t.confidence),
            ("sigma_slack", t.sigma_slack),
            ("certificate_threshold", t.certificate_threshold),
            ("pass_fraction", t.pass_fraction),
            ("monotone_fraction", t.monotone_fraction),
        ];
        let offending: Vec<&str> = positive
            .iter()
            .filter(|(_, v)| !(*v > 0.0 && v.is_finite()))
            .map(|(k, _)| *k)
            .collect();
        if !offending.is_empty() {
            return bad(format!(
                "thresholds must be positive: {}",
                offending.join(", ")
            ));
        }
        if t.confidence >= 1.0 {
            return bad("thresholds.confidence must be below 1".into());
        }
        Ok(())
    }

    /// Applies a JSON object on top of the preset of its `name` (or of `fallback`), then
    /// validates. Unknown keys are reported together.
    pub fn from_json(value: &Value, fallback: Option<ExperimentName>) -> Result<Self> {
        let obj = match value {
            Value::Object(o) => o.clone(),
            Value::Null => Default::default(),
            _ => return Err(Error::Parse("config must be a JSON object".into())),
        };
        let name = match obj.get("name") {
            Some(Value::String(s)) => ExperimentName::parse(s)?,
            Some(_) => return Err(Error::Parse("name must be a string".into())),
            None => fallback.ok_or_else(|| Error::Parse("config has no name".into()))?,
        };
        let mut merged = serde_json::to_value(Self::preset(name)).expect("serializable");
        let unknown = merge(&mut merged, &Value::Object(obj), "");
        if !unknown.is_empty() {
            return Err(Error::Parse(format!(
                "unknown keys: {}",
                unknown.join(", ")
            )));
        }
        let cfg: Self = serde_json::from_value(merged).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies `key=value` overrides; dotted keys reach into nested objects and values
    /// are parsed as JSON, falling back to a plain string.
    pub fn with_overrides(&self, overrides: &[(String, String)]) -> Result<Self> {
        let mut patch = serde_json::Map::new();
        for (key, raw) in overrides {
            let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.clone()));
            let mut parts = key.split('.').collect::<Vec<_>>();
            let last = parts.pop().expect("split yields one part");
            let mut node = &mut patch;
            for p in parts {
                node = node
                    .entry(p.to_string())
                    .or_insert_with(|| Value::Object(Default::default()))
                    .as_object_mut()
                    .ok_or_else(|| Error::Parse(format!("`{key}` overrides a scalar")))?;
            }
            node.insert(last.to_string(), value);
        }
        let mut base = serde_json::to_value(self).expect("serializable");
        let unknown = merge(&mut base, &Value::Object(patch.clone()), "");
        if !unknown.is_empty() {
            return Err(Error::Parse(format!(
                "unknown keys: {}",
                unknown.join(", ")
            )));
        }
        Self::from_json(&base, Some(self.name))
    }
}

/// Deep-merges `patch` into `base`, returning the dotted paths absent from `base`.
/// Objects inside nullable slots (e.g. `mixture`) are taken whole.
fn merge(base: &mut Value, patch: &Value, prefix: &str) -> Vec<String> {
    let mut unknown = Vec::new();
    let (Value::Object(b), Value::Object(p)) = (&mut *base, patch) else {
        *base = patch.clone();
        return unknown;
    };
    for (k, v) in p {
        let path = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match b.get_mut(k) {
            None => unknown.push(path),
            Some(slot @ Value::Object(_)) if v.is_object() => {
                unknown.extend(merge(slot, v, &path));
            }
            Some(slot) => *slot = v.clone(),
        }
    }
    unknown
}
