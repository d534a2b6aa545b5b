//! Run configuration: one JSON document drives fit, score, train,
//! experiment, and report. Unknown keys are rejected so typos fail fast.
//!
//! A single `master_seed` fans out to every randomized component as
//! `component_seed = master_seed ^ fnv1a(component_name)` (see
//! [`crate::seeding`]); component names are `"dataset"`, `"estimator"`,
//! `"env"`, `"rl"`, and `"cell:<estimator>:<n>:<seed_index>"` for
//! experiment cells.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::ExponentForm;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub estimator: EstimatorConfig,
    #[serde(default)]
    pub reward: RewardConfig,
    pub env: EnvConfig,
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub rl: RlConfig,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub score_grid: ScoreGridConfig,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default = "format_version_one")]
    pub format_version: u32,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("runs")
}

fn format_version_one() -> u32 {
    1
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::InvalidConfig(format!(
                "config file not found: {}",
                path.display()
            )));
        }
        let body = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let cfg: RunConfig = serde_json::from_str(&body)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.dataset.validate()?;
        if let Some(sweep) = &self.sweep {
            for kind in &sweep.estimators {
                EstimatorConfig::default_for_kind(kind)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum EstimatorConfig {
    Kernel {
        /// Bandwidth; defaults to the median pairwise distance heuristic.
        #[serde(default)]
        bandwidth: Option<f64>,
        #[serde(default)]
        exponent_form: ExponentForm,
        /// Retained components; defaults to the 99.9%-trace auto rule.
        #[serde(default)]
        m: Option<usize>,
        /// Pseudoinverse cutoff; defaults to 1e-10 * lambda_max.
        #[serde(default)]
        ridge: Option<f64>,
    },
    Rnd {
        #[serde(default = "default_target_hidden")]
        target_hidden: Vec<usize>,
        #[serde(default = "default_predictor_hidden")]
        predictor_hidden: Vec<usize>,
        #[serde(default = "default_embed_dim")]
        embed_dim: usize,
        #[serde(default = "default_fit_steps")]
        steps: usize,
    },
    Ae {
        #[serde(default = "default_predictor_hidden")]
        hidden: Vec<usize>,
        #[serde(default = "default_ae_decay")]
        weight_decay: f64,
        #[serde(default = "default_fit_steps")]
        steps: usize,
    },
    Exact {},
}

fn default_target_hidden() -> Vec<usize> {
    vec![64, 64]
}

fn default_predictor_hidden() -> Vec<usize> {
    vec![128, 128]
}

fn default_embed_dim() -> usize {
    crate::estimators::DEFAULT_EMBED_DIM
}

fn default_fit_steps() -> usize {
    crate::estimators::DEFAULT_FIT_STEPS
}

fn default_ae_decay() -> f64 {
    crate::estimators::DEFAULT_AE_WEIGHT_DECAY
}

impl EstimatorConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            EstimatorConfig::Kernel { .. } => "kernel",
            EstimatorConfig::Rnd { .. } => "rnd",
            EstimatorConfig::Ae { .. } => "ae",
            EstimatorConfig::Exact {} => "exact",
        }
    }

    /// All-defaults config for an estimator kind name.
    pub fn default_for_kind(kind: &str) -> Result<EstimatorConfig> {
        let body = format!("{{\"kind\": \"{kind}\"}}");
        serde_json::from_str(&body)
            .map_err(|_| Error::InvalidConfig(format!("unknown estimator kind: {kind}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardConfig {
    /// Calibration target: the q-quantile expert pair gets reward rho.
    pub rho: f64,
    pub q: f64,
    pub terminal_enabled: bool,
    pub sigma2: f64,
    pub sigma3: f64,
    /// Slope of the linear visualization reward `1 - alpha1 * L`.
    pub viz_alpha1: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            rho: 0.9,
            q: 0.9,
            terminal_enabled: false,
            sigma2: 0.0,
            sigma3: 0.0,
            viz_alpha1: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum EnvConfig {
    Simple {
        #[serde(default = "default_episode_len")]
        episode_len: usize,
    },
    Grid {},
}

fn default_episode_len() -> usize {
    crate::envs::SIMPLE_DEFAULT_EPISODE_LEN
}

impl EnvConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            EnvConfig::Simple { .. } => "simple",
            EnvConfig::Grid {} => "grid",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    /// Load an existing dataset CSV (+ metadata sidecar).
    #[serde(default)]
    pub path: Option<PathBuf>,
    /// Or generate expert data in-process.
    #[serde(default)]
    pub generate: Option<GenerateConfig>,
}

impl DatasetConfig {
    pub fn validate(&self) -> Result<()> {
        match (&self.path, &self.generate) {
            (Some(_), None) | (None, Some(_)) => Ok(()),
            _ => Err(Error::InvalidConfig(
                "dataset needs exactly one of `path` or `generate`".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateConfig {
    /// Pairs for the simple domain, trajectories for the gridworld.
    pub n: usize,
    /// Explicit dataset seed; defaults to the master-seed split.
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RlConfig {
    pub dqn: DqnSettings,
    pub tabular: TabularSettings,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DqnSettings {
    pub hidden: [usize; 2],
    pub gamma: f64,
    pub eps_start: f64,
    pub eps_end: f64,
    pub eps_decay_steps: usize,
    pub replay_capacity: usize,
    pub batch_size: usize,
    pub target_sync: usize,
    pub total_steps: usize,
    pub lr: f64,
    pub eval_interval: usize,
    pub eval_episodes: usize,
}

impl Default for DqnSettings {
    fn default() -> Self {
        DqnSettings {
            hidden: [64, 64],
            gamma: 0.99,
            eps_start: 1.0,
            eps_end: 0.05,
            eps_decay_steps: 5000,
            replay_capacity: 10_000,
            batch_size: 32,
            target_sync: 250,
            total_steps: 20_000,
            lr: 1e-3,
            eval_interval: 1000,
            eval_episodes: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TabularSettings {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub total_steps: usize,
    pub eval_interval: usize,
}

impl Default for TabularSettings {
    fn default() -> Self {
        let d = crate::rl::TabularConfig::default();
        TabularSettings {
            alpha: d.alpha,
            gamma: d.gamma,
            epsilon: d.epsilon,
            total_steps: d.total_steps,
            eval_interval: d.eval_interval,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ScoreGridConfig {
    /// Uniform 1-D state grid crossed with every action.
    Linspace {
        #[serde(default = "default_grid_min")]
        min: f64,
        #[serde(default = "default_grid_max")]
        max: f64,
        #[serde(default = "default_grid_points")]
        points: usize,
    },
    /// Score exactly the training pairs of the dataset.
    Dataset,
}

fn default_grid_min() -> f64 {
    -1.0
}

fn default_grid_max() -> f64 {
    1.0
}

fn default_grid_points() -> usize {
    201
}

impl Default for ScoreGridConfig {
    fn default() -> Self {
        ScoreGridConfig::Linspace {
            min: -1.0,
            max: 1.0,
            points: 201,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub sizes: Vec<usize>,
    pub estimators: Vec<String>,
    pub seeds: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_json() -> &'static str {
        r#"{
            "estimator": {"kind": "rnd"},
            "env": {"kind": "simple"},
            "dataset": {"generate": {"n": 10}}
        }"#
    }

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg: RunConfig = serde_json::from_str(minimal_json()).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.estimator.kind(), "rnd");
        assert_eq!(cfg.reward.rho, 0.9);
        assert_eq!(cfg.rl.dqn.total_steps, 20_000);
        assert_eq!(cfg.master_seed, 0);
        if let EstimatorConfig::Rnd { steps, embed_dim, .. } = cfg.estimator {
            assert_eq!(steps, 20_000);
            assert_eq!(embed_dim, 32);
        } else {
            panic!("wrong estimator");
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = r#"{
            "estimator": {"kind": "rnd"},
            "env": {"kind": "simple"},
            "dataset": {"generate": {"n": 10}},
            "typo_field": 1
        }"#;
        assert!(serde_json::from_str::<RunConfig>(bad).is_err());
        let bad_nested = r#"{
            "estimator": {"kind": "rnd", "step": 5},
            "env": {"kind": "simple"},
            "dataset": {"generate": {"n": 10}}
        }"#;
        assert!(serde_json::from_str::<RunConfig>(bad_nested).is_err());
    }

    #[test]
    fn dataset_requires_exactly_one_source() {
        let both = r#"{
            "estimator": {"kind": "exact"},
            "env": {"kind": "grid"},
            "dataset": {"path": "x.csv", "generate": {"n": 1}}
        }"#;
        let cfg: RunConfig = serde_json::from_str(both).unwrap();
        assert_eq!(cfg.validate().unwrap_err().kind(), "InvalidConfig");
    }

    #[test]
    fn estimator_kind_defaults() {
        for kind in ["kernel", "rnd", "ae", "exact"] {
            assert_eq!(
                EstimatorConfig::default_for_kind(kind).unwrap().kind(),
                kind
            );
        }
        assert!(EstimatorConfig::default_for_kind("gail").is_err());
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg: RunConfig = serde_json::from_str(minimal_json()).unwrap();
        let s = serde_json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(cfg, back);
    }
}
