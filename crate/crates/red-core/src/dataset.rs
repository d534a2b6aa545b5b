//! Expert demonstration data: state-action pairs flattened from expert
//! trajectories, plus CSV persistence with a JSON metadata sidecar.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ActionSpace {
    Discrete { n: usize },
    Continuous { dim: usize },
}

/// N expert state-action pairs; the sole training input of the pipeline.
/// Discrete actions are stored one-hot so pairs embed directly into the
/// joint scorer input `concat(state, action_encoding)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpertDataset {
    pub pairs: Vec<(Vec<f64>, Vec<f64>)>,
    pub action_space: ActionSpace,
    pub source: String,
    pub seed: Option<u64>,
}

#[derive(Serialize, Deserialize)]
struct DatasetMeta {
    action_space: ActionSpace,
    source: String,
    seed: Option<u64>,
    format_version: u32,
}

impl ExpertDataset {
    pub fn new(
        pairs: Vec<(Vec<f64>, Vec<f64>)>,
        action_space: ActionSpace,
        source: String,
        seed: Option<u64>,
    ) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let sd = pairs[0].0.len();
        let ad = pairs[0].1.len();
        for (s, a) in &pairs {
            if s.len() != sd {
                return Err(Error::ShapeMismatch {
                    what: "dataset state",
                    expected: sd,
                    got: s.len(),
                });
            }
            if a.len() != ad {
                return Err(Error::ShapeMismatch {
                    what: "dataset action encoding",
                    expected: ad,
                    got: a.len(),
                });
            }
        }
        Ok(ExpertDataset {
            pairs,
            action_space,
            source,
            seed,
        })
    }

    pub fn n(&self) -> usize {
        self.pairs.len()
    }

    pub fn state_dim(&self) -> usize {
        self.pairs[0].0.len()
    }

    pub fn action_dim(&self) -> usize {
        self.pairs[0].1.len()
    }

    pub fn joint_dim(&self) -> usize {
        self.state_dim() + self.action_dim()
    }

    /// `concat(state, action_encoding)` per pair; the scorer input space.
    pub fn joint_inputs(&self) -> Vec<Vec<f64>> {
        self.pairs
            .iter()
            .map(|(s, a)| {
                let mut x = Vec::with_capacity(s.len() + a.len());
                x.extend_from_slice(s);
                x.extend_from_slice(a);
                x
            })
            .collect()
    }

    /// Metadata sidecar path for a dataset CSV: `foo.csv` -> `foo.meta.json`.
    pub fn meta_path(csv_path: &Path) -> PathBuf {
        csv_path.with_extension("meta.json")
    }

    /// Write the CSV (`s_0,...,s_{d-1},a_enc_0,...`) and metadata sidecar.
    pub fn save(&self, csv_path: &Path) -> Result<()> {
        if let Some(parent) = csv_path.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent).map_err(|source| Error::Io {
                    path: parent.to_path_buf(),
                    source,
                })?;
            }
        }
        let mut out = String::new();
        let header: Vec<String> = (0..self.state_dim())
            .map(|i| format!("s_{i}"))
            .chain((0..self.action_dim()).map(|i| format!("a_enc_{i}")))
            .collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for (s, a) in &self.pairs {
            let row: Vec<String> = s.iter().chain(a.iter()).map(|v| v.to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        fs::write(csv_path, out).map_err(|source| Error::Io {
            path: csv_path.to_path_buf(),
            source,
        })?;
        crate::jsonio::write_json(
            &Self::meta_path(csv_path),
            &DatasetMeta {
                action_space: self.action_space,
                source: self.source.clone(),
                seed: self.seed,
                format_version: 1,
            },
        )
    }

    pub fn load(csv_path: &Path) -> Result<Self> {
        if !csv_path.exists() {
            return Err(Error::DatasetNotFound(csv_path.to_path_buf()));
        }
        let body = fs::read_to_string(csv_path).map_err(|source| Error::Io {
            path: csv_path.to_path_buf(),
            source,
        })?;
        let mut lines = body.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidConfig("dataset csv is empty".into()))?;
        let state_dim = header.split(',').filter(|c| c.starts_with("s_")).count();
        let action_dim = header
            .split(',')
            .filter(|c| c.starts_with("a_enc_"))
            .count();
        if state_dim == 0 || action_dim == 0 {
            return Err(Error::InvalidConfig(format!(
                "dataset csv header not recognized: {header}"
            )));
        }
        let mut pairs = Vec::new();
        for (ln, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|v| {
                    v.trim().parse::<f64>().map_err(|e| {
                        Error::InvalidConfig(format!("dataset csv row {}: {e}", ln + 2))
                    })
                })
                .collect::<Result<_>>()?;
            if vals.len() != state_dim + action_dim {
                return Err(Error::InvalidConfig(format!(
                    "dataset csv row {} has {} fields, expected {}",
                    ln + 2,
                    vals.len(),
                    state_dim + action_dim
                )));
            }
            pairs.push((
                vals[..state_dim].to_vec(),
                vals[state_dim..].to_vec(),
            ));
        }
        let meta: DatasetMeta = crate::jsonio::read_json(&Self::meta_path(csv_path))?;
        ExpertDataset::new(pairs, meta.action_space, meta.source, meta.seed)
    }
}
