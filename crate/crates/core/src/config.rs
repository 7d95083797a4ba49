//! Run configuration shared by the detection pipeline, the metrics and the CLI.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// When the agglomerative loop stops merging.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    /// Stop at the first merge whose SemQ gain is not larger than `epsilon`.
    FirstStall,
    /// Merge down to `min_clusters` and keep the best prefix of the trace.
    FullTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    /// Weight of the user-latent similarity in the combined similarity.
    pub alpha: f64,
    /// PurQ weights to report.
    pub betas: Vec<f64>,
    /// Lower bound on the number of event clusters.
    pub min_clusters: usize,
    /// Minimum SemQ improvement that counts as progress.
    pub epsilon: f64,
    /// Latent dimensions (the principal singular vector is excluded).
    pub svd_k: usize,
    /// Tags attached to fewer events than this are pruned.
    pub min_tag_freq: usize,
    /// Candidate-pair threshold on shared users or tags; 0 disables candidate selection.
    pub min_shared: usize,
    /// Cosine threshold for the profile-similarity fraction.
    pub profile_theta: f64,
    pub rng_seed: u64,
    /// IntraSem contribution of a single-event cluster.
    pub singleton_intra: f64,
    pub stop_rule: StopRule,
    /// Friend fraction pooled over all incident edges instead of averaged per community.
    pub friend_fraction_global: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            alpha: 0.3,
            betas: vec![0.5, 2.0],
            min_clusters: 2,
            epsilon: 1e-4,
            svd_k: 10,
            min_tag_freq: 5,
            min_shared: 0,
            profile_theta: 0.3,
            rng_seed: 7,
            singleton_intra: 0.0,
            stop_rule: StopRule::FullTrace,
            friend_fraction_global: false,
        }
    }
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad(format!("alpha must lie in [0,1], got {}", self.alpha));
        }
        if self.betas.is_empty() {
            return bad("at least one beta is required".into());
        }
        if let Some(b) = self.betas.iter().find(|b| !(b.is_finite() && **b > 0.0)) {
            return bad(format!("beta must be positive, got {b}"));
        }
        if self.min_clusters < 1 {
            return bad("min_clusters must be at least 1".into());
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return bad(format!("epsilon must be >= 0, got {}", self.epsilon));
        }
        if self.svd_k < 1 {
            return bad("svd_k must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.profile_theta) {
            return bad(format!(
                "theta must lie in [0,1], got {}",
                self.profile_theta
            ));
        }
        if !(0.0..=1.0).contains(&self.singleton_intra) {
            return bad(format!(
                "singleton_intra must lie in [0,1], got {}",
                self.singleton_intra
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        Config::default().validate().unwrap();
    }

    #[test]
    fn rejects_out_of_range_values() {
        let cases: [fn(&mut Config); 7] = [
            |c| c.alpha = 1.5,
            |c| c.betas = vec![],
            |c| c.betas = vec![0.0],
            |c| c.min_clusters = 0,
            |c| c.epsilon = -1.0,
            |c| c.svd_k = 0,
            |c| c.profile_theta = 2.0,
        ];
        for mutate in cases {
            let mut cfg = Config::default();
            mutate(&mut cfg);
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }
}
