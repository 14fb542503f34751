//! Run configuration: one TOML file covering every tunable in the
//! pipeline, validated on load, with the merged effective values echoed
//! into the run directory so a run can be reproduced from its output.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use bridgewatch::behavior::BehaviorConfig;
use bridgewatch::ingest::normalize_subreddit;
use bridgewatch::sentiment::OutlierThresholds;
use bridgewatch::topics::{EstimateMode, LdaConfig};

use crate::error::CliError;
use crate::paths::{read_text, write_text, RunDir};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphConfig {
    /// Edges below this weight are dropped (1 keeps everything).
    pub min_edge_weight: u64,
    /// Length of the exported degree ranking.
    pub top_degree: usize,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig { min_edge_weight: 1, top_degree: 10 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; every stage derives its own stream from it.
    pub seed: u64,
    pub out_dir: String,
    pub community_a: String,
    pub community_b: String,
    /// Minimum records in each community for dual-user selection.
    pub min_each: u64,
    /// TSV polarity lexicon path; the embedded lexicon when omitted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lexicon: Option<PathBuf>,
    /// Vocabulary pruning: minimum document frequency.
    pub min_df: u32,
    /// Vocabulary pruning: maximum document-frequency ratio.
    pub max_df_ratio: f64,
    /// Keywords listed per topic in summaries.
    pub top_words: usize,
    /// Include comments (not just posts) when building model corpora.
    pub include_comments: bool,
    /// Model over dual users' documents. Its seed field is ignored: the
    /// training seed is derived from the master seed and the stage name.
    pub topics_dual: LdaConfig,
    /// Model over the full corpus; same seed handling as topics_dual.
    pub topics_all: LdaConfig,
    pub outliers: OutlierThresholds,
    pub behavior: BehaviorConfig,
    pub graph: GraphConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            out_dir: "run".to_string(),
            community_a: "sino".to_string(),
            community_b: "china".to_string(),
            min_each: 3,
            lexicon: None,
            min_df: 5,
            max_df_ratio: 0.5,
            top_words: 10,
            include_comments: true,
            topics_dual: LdaConfig::default(),
            topics_all: LdaConfig::default(),
            outliers: OutlierThresholds::default(),
            behavior: BehaviorConfig::default(),
            graph: GraphConfig::default(),
        }
    }
}

fn check_lda(name: &str, lda: &LdaConfig) -> Result<(), String> {
    if lda.k == 0 {
        return Err(format!("{name}.k must be positive"));
    }
    if !(lda.alpha > 0.0) || !lda.alpha.is_finite() {
        return Err(format!("{name}.alpha must be positive and finite"));
    }
    if !(lda.beta > 0.0) || !lda.beta.is_finite() {
        return Err(format!("{name}.beta must be positive and finite"));
    }
    if lda.iterations == 0 {
        return Err(format!("{name}.iterations must be positive"));
    }
    if lda.estimate == EstimateMode::AverageAfterBurnIn && lda.burn_in >= lda.iterations {
        return Err(format!(
            "{name}.burn_in ({}) must be below iterations ({}) when averaging",
            lda.burn_in, lda.iterations
        ));
    }
    Ok(())
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        self.validate_inner().map_err(CliError::Validation)
    }

    fn validate_inner(&self) -> Result<(), String> {
        if self.community_a.trim().is_empty() || self.community_b.trim().is_empty() {
            return Err("community_a and community_b must be non-empty".to_string());
        }
        if normalize_subreddit(&self.community_a) == normalize_subreddit(&self.community_b) {
            return Err(format!(
                "community_a and community_b must differ ({} vs {})",
                self.community_a, self.community_b
            ));
        }
        if self.min_each == 0 {
            return Err("min_each must be at least 1".to_string());
        }
        if self.min_df == 0 {
            return Err("min_df must be at least 1".to_string());
        }
        if !(self.max_df_ratio > 0.0 && self.max_df_ratio <= 1.0) {
            return Err(format!("max_df_ratio {} must be in (0, 1]", self.max_df_ratio));
        }
        if self.top_words == 0 {
            return Err("top_words must be at least 1".to_string());
        }
        check_lda("topics_dual", &self.topics_dual)?;
        check_lda("topics_all", &self.topics_all)?;

        let t = &self.outliers;
        if !(t.tau_pos > 0.0) || !(t.tau_neg > 0.0) || !(t.sigma_min > 0.0) {
            return Err("outlier thresholds must be positive".to_string());
        }
        if t.min_posts_per_cell == 0 {
            return Err("outliers.min_posts_per_cell must be at least 1".to_string());
        }
        if t.min_topics_for_variance < 2 {
            return Err("outliers.min_topics_for_variance must be at least 2".to_string());
        }

        let b = &self.behavior;
        if !(b.theta_rate > 0.0) || !(b.theta_imb > 0.0) {
            return Err("behavior rate/imbalance thresholds must be positive".to_string());
        }
        if b.theta_act == 0 {
            return Err("behavior.theta_act must be at least 1".to_string());
        }
        if b.theta_link < 0 {
            return Err("behavior.theta_link must be non-negative".to_string());
        }
        if !(b.theta_lex > 0.0 && b.theta_lex <= 1.0) {
            return Err(format!("behavior.theta_lex {} must be in (0, 1]", b.theta_lex));
        }
        if b.mattr_window == 0 || b.min_tokens_for_lex == 0 || b.flag_threshold == 0 {
            return Err("behavior window/minimum/threshold values must be positive".to_string());
        }
        if b.expected_language.trim().is_empty() {
            return Err("behavior.expected_language must be non-empty".to_string());
        }

        if self.graph.min_edge_weight == 0 {
            return Err("graph.min_edge_weight must be at least 1".to_string());
        }
        if self.graph.top_degree == 0 {
            return Err("graph.top_degree must be at least 1".to_string());
        }
        Ok(())
    }

    /// Read the file (when given), apply command-line overrides, validate.
    pub fn load(
        config_path: Option<&Path>,
        seed: Option<u64>,
        out: Option<&Path>,
    ) -> Result<RunConfig, CliError> {
        let mut config = match config_path {
            Some(path) => {
                let text = read_text(path)?;
                toml::from_str(&text).map_err(|e| {
                    CliError::Validation(format!("config {}: {e}", path.display()))
                })?
            }
            None => RunConfig::default(),
        };
        if let Some(seed) = seed {
            config.seed = seed;
        }
        if let Some(out) = out {
            config.out_dir = out.display().to_string();
        }
        config.validate()?;
        Ok(config)
    }

    /// Write the merged effective configuration into the run directory.
    pub fn echo(&self, dir: &RunDir) -> Result<(), CliError> {
        let text = toml::to_string_pretty(self)
            .map_err(|e| CliError::Validation(format!("cannot serialize config: {e}")))?;
        write_text(&dir.config_echo(), &text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_round_trip() {
        let config = RunConfig::default();
        config.validate().unwrap();
        let text = toml::to_string_pretty(&config).unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(toml::to_string_pretty(&back).unwrap(), text);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("mystery = 1").is_err());
        assert!(toml::from_str::<RunConfig>("[topics_dual]\nmystery = 1").is_err());
        assert!(toml::from_str::<RunConfig>("[outliers]\nmystery = 1").is_err());
    }

    #[test]
    fn partial_files_inherit_defaults() {
        let config: RunConfig =
            toml::from_str("seed = 7\n[topics_dual]\nk = 3\n").unwrap();
        assert_eq!(config.seed, 7);
        assert_eq!(config.topics_dual.k, 3);
        assert_eq!(config.topics_all.k, LdaConfig::default().k);
        assert_eq!(config.min_each, 3);
    }

    #[test]
    fn validation_catches_bad_values() {
        let mut config = RunConfig::default();
        config.topics_dual.k = 0;
        assert!(config.validate().is_err());

        let mut config = RunConfig::default();
        config.community_b = "r/Sino".to_string();
        assert!(config.validate().is_err(), "communities equal after normalization");

        let mut config = RunConfig::default();
        config.max_df_ratio = 0.0;
        assert!(config.validate().is_err());
    }
}
