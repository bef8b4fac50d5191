//! Binomial proportions and their Wilson intervals.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

/// Two-sided standard normal quantile for `confidence`.
pub fn z_value(confidence: f64) -> f64 {
    Normal::new(0.0, 1.0)
        .expect("standard normal")
        .inverse_cdf(0.5 + confidence / 2.0)
}

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64, confidence: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let q = successes as f64 / n;
    let z = z_value(confidence);
    let z2 = z * z;
    let centre = (q + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (q * (1.0 - q) / n + z2 / (4.0 * n * n)).sqrt();
    // the endpoints are exactly 0 and 1 at the extremes; keep roundoff out
    let lo = if successes == 0 {
        0.0
    } else {
        (centre - half).max(0.0)
    };
    let hi = if successes >= trials {
        1.0
    } else {
        (centre + half).min(1.0)
    };
    (lo, hi)
}

/// An estimated probability with its Wilson interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub label: String,
    pub n: Option<u64>,
    pub successes: u64,
    pub trials: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Proportion {
    pub fn new(
        label: impl Into<String>,
        n: Option<u64>,
        successes: u64,
        trials: u64,
        confidence: f64,
    ) -> Self {
        let (ci_low, ci_high) = wilson_interval(successes, trials, confidence);
        Proportion {
            label: label.into(),
            n,
            successes,
            trials,
            estimate: if trials == 0 {
                0.0
            } else {
                successes as f64 / trials as f64
            },
            ci_low,
            ci_high,
        }
    }

    /// Binomial standard deviation of the estimate at success probability `q`.
    pub fn sigma_at(&self, q: f64) -> f64 {
        (q * (1.0 - q) / self.trials as f64).sqrt()
    }
}
