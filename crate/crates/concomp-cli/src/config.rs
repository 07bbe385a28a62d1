//! Experiment configuration: a JSON file with flag overrides.

use std::path::Path;

use anyhow::{bail, Context, Result};
use concomp::mechanisms::QueryFn;
use concomp::PrivacyParams;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub trials: u64,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub horizon: Option<usize>,
    pub zero_noise: bool,
    /// Number of mechanisms `A_δ` may create.
    pub ell: usize,
    /// Randomized-response children for the composition search.
    pub children: Vec<PrivacyParams>,
    pub d: usize,
    pub query: QueryFn,
    /// Number of random streams (structural, histogram).
    pub streams: usize,
    /// Constant threshold increment; the default schedule when absent.
    pub gamma: Option<f64>,
    /// `rr`, `irr` or `m_delta` (enumerate); an instance name (reduction).
    pub mechanism: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let child = PrivacyParams { epsilon: 0.5, delta: 0.1 };
        ExperimentConfig {
            seed: 0,
            trials: 10_000,
            epsilon: None,
            delta: None,
            horizon: None,
            zero_noise: false,
            ell: 3,
            children: vec![child, child],
            d: 2,
            query: QueryFn::Max,
            streams: 1,
            gamma: None,
            mechanism: None,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    #[cfg(test)]
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(e) = self.epsilon {
            if !(e >= 0.0 && e.is_finite()) {
                bail!("field `epsilon`: {e} must be finite and >= 0");
            }
        }
        if let Some(d) = self.delta {
            if !(0.0..=1.0).contains(&d) {
                bail!("field `delta`: {d} must lie in [0, 1]");
            }
        }
        if self.horizon == Some(0) {
            bail!("field `horizon`: must be >= 1");
        }
        if self.d == 0 {
            bail!("field `d`: must be >= 1");
        }
        for (i, c) in self.children.iter().enumerate() {
            PrivacyParams::new(c.epsilon, c.delta).with_context(|| format!("field `children[{i}]`"))?;
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                bail!("field `gamma`: {g} must be finite and > 0");
            }
        }
        Ok(())
    }
}
