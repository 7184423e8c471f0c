//! Binomial estimates with standard errors and Wilson intervals.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Estimate {
    pub successes: u64,
    pub trials: u64,
}

impl Estimate {
    pub fn new(successes: u64, trials: u64) -> Self {
        debug_assert!(successes <= trials);
        Estimate { successes, trials }
    }

    /// Maximum-likelihood frequency; 0 when there were no trials.
    pub fn value(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.successes as f64 / self.trials as f64
        }
    }

    /// sqrt(p̂(1−p̂)/n).
    pub fn std_error(&self) -> f64 {
        if self.trials == 0 {
            return f64::INFINITY;
        }
        let p = self.value();
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }

    /// Wilson score interval at `z` standard deviations.
    pub fn wilson(&self, z: f64) -> (f64, f64) {
        if self.trials == 0 {
            return (0.0, 1.0);
        }
        let n = self.trials as f64;
        let p = self.value();
        let z2 = z * z;
        let denom = 1.0 + z2 / n;
        let centre = (p + z2 / (2.0 * n)) / denom;
        let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
        ((centre - half).max(0.0), (centre + half).min(1.0))
    }

    /// Standard error a binomial with true probability `p` would have at
    /// this sample size.
    pub fn expected_std_error(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }

    /// |p̂ − p| in units of the standard error expected under `p`.
    pub fn z_score(&self, p: f64) -> f64 {
        let diff = (self.value() - p).abs();
        if diff == 0.0 {
            return 0.0;
        }
        diff / self.expected_std_error(p)
    }
}

/// Ratio of two multinomial cell counts with a delta-method error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioEstimate {
    pub value: f64,
    pub std_error: f64,
}

impl RatioEstimate {
    /// `numerator / denominator` where both are counts from the same
    /// `trials` multinomial draws. Infinite when the denominator is empty.
    pub fn from_counts(numerator: u64, denominator: u64, trials: u64) -> Self {
        if denominator == 0 {
            return RatioEstimate {
                value: f64::INFINITY,
                std_error: f64::INFINITY,
            };
        }
        let value = numerator as f64 / denominator as f64;
        if numerator == 0 {
            return RatioEstimate {
                value,
                std_error: 0.0,
            };
        }
        let n = trials as f64;
        let (a, b) = (numerator as f64, denominator as f64);
        // var(log r) = (1-pa)/a + (1-pb)/b + 2/n for two multinomial cells.
        let var_log = (1.0 - a / n) / a + (1.0 - b / n) / b + 2.0 / n;
        RatioEstimate {
            value,
            std_error: value * var_log.sqrt(),
        }
    }
}
