use serde::{Deserialize, Serialize};

/// One measured quantity and the band it must fall in.
///
/// A NaN value never passes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Check {
    pub suite: String,
    pub name: String,
    pub value: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    /// Number of sampled instances behind `value` (1 for a single evaluation).
    pub samples: usize,
    pub pass: bool,
}

impl Check {
    fn new(suite: &str, name: &str, value: f64, lower: Option<f64>, upper: Option<f64>, samples: usize) -> Self {
        let pass = !value.is_nan() && lower.is_none_or(|l| value >= l) && upper.is_none_or(|u| value <= u);
        Check { suite: suite.to_string(), name: name.to_string(), value, lower, upper, samples, pass }
    }

    pub fn at_most(suite: &str, name: &str, value: f64, upper: f64) -> Self {
        Self::new(suite, name, value, None, Some(upper), 1)
    }

    pub fn at_least(suite: &str, name: &str, value: f64, lower: f64) -> Self {
        Self::new(suite, name, value, Some(lower), None, 1)
    }

    pub fn between(suite: &str, name: &str, value: f64, lower: f64, upper: f64) -> Self {
        Self::new(suite, name, value, Some(lower), Some(upper), 1)
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    /// Human-readable band, e.g. `<= 1e-10` or `in [3.2, 4.8]`.
    pub fn band(&self) -> String {
        match (self.lower, self.upper) {
            (Some(l), Some(u)) => format!("in [{l:e}, {u:e}]"),
            (Some(l), None) => format!(">= {l:e}"),
            (None, Some(u)) => format!("<= {u:e}"),
            (None, None) => "unbounded".to_string(),
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}/{}: {:.6e} {} (n={})",
            if self.pass { "PASS" } else { "FAIL" },
            self.suite,
            self.name,
            self.value,
            self.band(),
            self.samples
        )
    }
}

/// Running maximum that turns NaN into a failure instead of dropping it.
pub(crate) fn worst(acc: f64, x: f64) -> f64 {
    if x.is_nan() || acc.is_nan() {
        f64::NAN
    } else {
        acc.max(x)
    }
}
