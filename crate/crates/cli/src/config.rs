use std::path::Path;

use anyhow::{Context, Result};
use giantfluct::{CampaignConfig, SdeMode, TolerancePolicy};
use serde::{Deserialize, Serialize};

/// Everything the subcommands read. Every section and field is optional in
/// the JSON file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabConfig {
    pub campaign: CampaignConfig,
    pub verify: VerifyConfig,
    pub sde: SdeConfig,
    pub appendix: AppendixConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub policy: TolerancePolicy,
    /// Exceedance threshold exponent: `|X| > n^gamma`.
    pub tail_gamma: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            policy: TolerancePolicy::default(),
            tail_gamma: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SdeConfig {
    pub t0: f64,
    pub t1: f64,
    pub steps: usize,
    /// Euler paths used for the marginal-variance check.
    pub paths: usize,
    pub mode: SdeMode,
    /// Start value of the written path; drawn from the limit law when absent.
    pub x0: Option<f64>,
    pub closed_form_grid: Vec<f64>,
    pub closed_form_samples: usize,
    /// Allowed relative error of the Euler marginal variance.
    pub variance_rel_tol: f64,
    pub seed: u64,
}

impl Default for SdeConfig {
    fn default() -> Self {
        SdeConfig {
            t0: 1.5,
            t1: 2.0,
            steps: 10_000,
            paths: 10_000,
            mode: SdeMode::Stochastic,
            x0: None,
            closed_form_grid: vec![1.5, 2.0, 2.5, 3.0],
            closed_form_samples: 100_000,
            variance_rel_tol: 0.05,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppendixConfig {
    pub ns: Vec<usize>,
    pub ks: Vec<usize>,
    pub ys: Vec<f64>,
    /// `x` grid of the large-deviation table, for every `y` in `ys` above 1.
    pub ld_xs: Vec<f64>,
    pub subcritical_n: usize,
    /// Supercritical times `t`; each check runs `ER(n, lambda(t)/n)`, the
    /// graph left outside the giant component.
    pub subcritical_t: Vec<f64>,
    pub subcritical_reps: usize,
    pub seed: u64,
}

impl Default for AppendixConfig {
    fn default() -> Self {
        AppendixConfig {
            ns: vec![150, 300, 600],
            ks: vec![1, 2, 3],
            ys: vec![2.0, 3.0],
            ld_xs: (1..=19).map(|i| i as f64 * 0.05).collect(),
            subcritical_n: 10_000,
            subcritical_t: vec![2.0, 3.0],
            subcritical_reps: 200,
            seed: 7,
        }
    }
}

impl LabConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(LabConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// One seed for every stochastic section.
    pub fn override_seed(&mut self, seed: u64) {
        self.campaign.master_seed = seed;
        self.sde.seed = seed;
        self.appendix.seed = seed;
    }
}
