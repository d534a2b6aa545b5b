//! On-disk artifacts shared by the pipeline commands: fitted scorer models,
//! fit statistics, reward models, run records, and CSV codecs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{AeModel, ExactSupportModel, RndModel, SupportScorer};
use crate::jsonio;
use crate::kernel::KernelSupportModel;
use crate::rl::CurvePoint;

use super::config::RunConfig;

/// A fitted scorer of any kind, for uniform persistence and dispatch.
pub enum ScorerModel {
    Kernel(KernelSupportModel),
    Rnd(RndModel),
    Ae(AeModel),
    Exact(ExactSupportModel),
}

impl ScorerModel {
    pub fn kind(&self) -> &'static str {
        match self {
            ScorerModel::Kernel(_) => "kernel",
            ScorerModel::Rnd(_) => "rnd",
            ScorerModel::Ae(_) => "ae",
            ScorerModel::Exact(_) => "exact",
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        match self {
            ScorerModel::Kernel(m) => jsonio::write_json(path, m),
            ScorerModel::Rnd(m) => jsonio::write_json(path, m),
            ScorerModel::Ae(m) => jsonio::write_json(path, m),
            ScorerModel::Exact(m) => jsonio::write_json(path, m),
        }
    }

    /// Load any scorer model. The kernel schema is recognized by its
    /// `eigvals` field; the neural and exact models carry a `descriptor`.
    pub fn load(path: &Path) -> Result<ScorerModel> {
        if !path.exists() {
            return Err(Error::ModelNotFound(path.to_path_buf()));
        }
        let value: serde_json::Value = jsonio::read_json(path)?;
        let from = |e: serde_json::Error| Error::Json {
            path: path.to_path_buf(),
            source: e,
        };
        if value.get("eigvals").is_some() {
            return Ok(ScorerModel::Kernel(
                serde_json::from_value(value).map_err(from)?,
            ));
        }
        match value.get("descriptor").and_then(|d| d.as_str()) {
            Some("rnd") => Ok(ScorerModel::Rnd(
                serde_json::from_value(value).map_err(from)?,
            )),
            Some("ae") => Ok(ScorerModel::Ae(
                serde_json::from_value(value).map_err(from)?,
            )),
            Some("exact") => Ok(ScorerModel::Exact(
                serde_json::from_value(value).map_err(from)?,
            )),
            _ => Err(Error::InvalidConfig(format!(
                "unrecognized scorer model file: {}",
                path.display()
            ))),
        }
    }

    pub fn into_scorer(self) -> Box<dyn SupportScorer> {
        match self {
            ScorerModel::Kernel(m) => Box::new(m),
            ScorerModel::Rnd(m) => Box::new(m),
            ScorerModel::Ae(m) => Box::new(m),
            ScorerModel::Exact(m) => Box::new(m),
        }
    }
}

impl SupportScorer for ScorerModel {
    fn score(&self, x: &[f64]) -> Result<f64> {
        match self {
            ScorerModel::Kernel(m) => m.score(x),
            ScorerModel::Rnd(m) => m.score(x),
            ScorerModel::Ae(m) => m.score(x),
            ScorerModel::Exact(m) => m.score(x),
        }
    }

    fn input_dim(&self) -> usize {
        match self {
            ScorerModel::Kernel(m) => m.input_dim(),
            ScorerModel::Rnd(m) => m.input_dim(),
            ScorerModel::Ae(m) => m.input_dim(),
            ScorerModel::Exact(m) => m.input_dim(),
        }
    }

    fn descriptor(&self) -> String {
        match self {
            ScorerModel::Kernel(m) => m.descriptor(),
            ScorerModel::Rnd(m) => m.descriptor(),
            ScorerModel::Ae(m) => m.descriptor(),
            ScorerModel::Exact(m) => m.descriptor(),
        }
    }
}

/// Per-pair expert losses and their summary, written next to the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitStats {
    pub losses: Vec<f64>,
    pub n: usize,
    pub mean: f64,
    pub quantiles: LossQuantiles,
    pub format_version: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossQuantiles {
    pub q50: f64,
    pub q90: f64,
    pub max: f64,
}

impl FitStats {
    pub fn from_losses(losses: Vec<f64>) -> Self {
        let n = losses.len();
        let mean = crate::stats::mean(&losses);
        let quantiles = LossQuantiles {
            q50: crate::stats::quantile(&losses, 0.5),
            q90: crate::stats::quantile(&losses, 0.9),
            max: crate::stats::quantile(&losses, 1.0),
        };
        FitStats {
            losses,
            n,
            mean,
            quantiles,
            format_version: 1,
        }
    }
}

/// Reward model persisted by `train`: a pointer to the scorer file plus the
/// calibration outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardModelFile {
    pub scorer_path: PathBuf,
    pub sigma1: f64,
    pub r_bar: f64,
    pub sigma2: f64,
    pub sigma3: f64,
    pub terminal_enabled: bool,
    pub format_version: u32,
}

/// Everything needed to reproduce and summarize one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: RunConfig,
    pub estimator_kind: String,
    pub scorer_descriptor: String,
    pub n_pairs: usize,
    pub sigma1: f64,
    pub r_bar: f64,
    pub curve: Vec<CurvePoint>,
    /// Final curve row values; absent when training ran for zero steps.
    pub final_per_step: Option<f64>,
    pub final_per_episode: Option<f64>,
    pub wall_clock_s: f64,
    pub format_version: u32,
}

/// File-name stem identifying a run: `<env>-<estimator>-n<pairs>-s<seed>`.
pub fn run_stem(cfg: &RunConfig, n_pairs: usize) -> String {
    format!(
        "{}-{}-n{}-s{}",
        cfg.env.kind(),
        cfg.estimator.kind(),
        n_pairs,
        cfg.master_seed
    )
}

/// Learning-curve CSV: `env_step,true_reward_per_step,true_reward_per_episode,eval_std,seed`.
pub fn write_curve_csv(path: &Path, curve: &[CurvePoint], seed: u64) -> Result<()> {
    let mut body = String::from("env_step,true_reward_per_step,true_reward_per_episode,eval_std,seed\n");
    for p in curve {
        body.push_str(&format!(
            "{},{},{},{},{}\n",
            p.env_step, p.true_reward_per_step, p.true_reward_per_episode, p.eval_std, seed
        ));
    }
    write_text(path, &body)
}

/// One reward-map row of the score CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub s: String,
    pub a: f64,
    pub score: f64,
    pub reward: f64,
    pub viz_reward: f64,
}

/// Score CSV: `s,a,score,reward,viz_reward`. Multi-dimensional states are
/// serialized as `;`-joined coordinates in the `s` column.
pub fn write_score_csv(path: &Path, rows: &[ScoreRow]) -> Result<()> {
    let mut body = String::from("s,a,score,reward,viz_reward\n");
    for r in rows {
        body.push_str(&format!(
            "{},{},{},{},{}\n",
            r.s, r.a, r.score, r.reward, r.viz_reward
        ));
    }
    write_text(path, &body)
}

pub fn read_score_csv(path: &Path) -> Result<Vec<ScoreRow>> {
    let body = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut rows = Vec::new();
    for (i, line) in body.lines().enumerate() {
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 5 {
            return Err(Error::InvalidConfig(format!(
                "score csv row {} has {} fields",
                i + 1,
                parts.len()
            )));
        }
        let parse = |v: &str| -> Result<f64> {
            v.parse()
                .map_err(|e| Error::InvalidConfig(format!("score csv row {}: {e}", i + 1)))
        };
        rows.push(ScoreRow {
            s: parts[0].to_string(),
            a: parse(parts[1])?,
            score: parse(parts[2])?,
            reward: parse(parts[3])?,
            viz_reward: parse(parts[4])?,
        });
    }
    Ok(rows)
}

pub fn write_text(path: &Path, body: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|source| Error::Io {
                path: parent.to_path_buf(),
                source,
            })?;
        }
    }
    std::fs::write(path, body).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
