//! Support scorers over expert state-action pairs.
//!
//! All scorers share one contract: `score(x) >= 0`, lower means more
//! on-support, deterministic once fitted. Four implementations exist:
//! random network distillation (a fixed random target network distilled by a
//! trained predictor), an overparametrized l2-regularized autoencoder, an
//! exact-set lookup for discrete spaces, and the kernel model in
//! [`crate::kernel`].

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::dataset::ExpertDataset;
use crate::error::{Error, Result};
use crate::nn::{
    adam_step, mlp_forward, mlp_grad, mlp_init, mse_loss, Activation, AdamHyper, AdamState,
    MlpParams, MlpSpec,
};
use crate::seeding::split_seed;

/// Fitted support scorer: nonnegative, lower = more on-support.
pub trait SupportScorer: Send + Sync {
    fn score(&self, x: &[f64]) -> Result<f64>;
    fn input_dim(&self) -> usize;
    fn descriptor(&self) -> String;
}

/// Per-feature standardization fitted on expert data. Keeps the neural
/// scorers scale-robust; std entries are clamped at 1e-8.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalizer {
    pub fn fit(points: &[Vec<f64>]) -> Self {
        let dim = points[0].len();
        let n = points.len() as f64;
        let mut mean = vec![0.0; dim];
        for p in points {
            for (m, v) in mean.iter_mut().zip(p) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut std = vec![0.0; dim];
        for p in points {
            for (s, (v, m)) in std.iter_mut().zip(p.iter().zip(&mean)) {
                *s += (v - m) * (v - m);
            }
        }
        for s in &mut std {
            *s = (*s / n).sqrt().max(1e-8);
        }
        Normalizer { mean, std }
    }

    pub fn normalize(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.mean.len() {
            return Err(Error::ShapeMismatch {
                what: "normalizer input",
                expected: self.mean.len(),
                got: x.len(),
            });
        }
        Ok(x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect())
    }

    pub fn denormalize(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| v * s + m)
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Random network distillation
// ---------------------------------------------------------------------------

pub const DEFAULT_EMBED_DIM: usize = 32;
pub const DEFAULT_FIT_STEPS: usize = 20_000;

/// Default target architecture: input -> 64 -> 64 -> 32, tanh.
pub fn default_target_spec(input_dim: usize) -> MlpSpec {
    MlpSpec::new(input_dim, vec![64, 64], DEFAULT_EMBED_DIM, Activation::Tanh, 1.0)
        .expect("static spec")
}

/// Default predictor architecture: input -> 128 -> 128 -> 32, tanh.
/// Wider than the target so residual error reflects data novelty rather
/// than model misspecification.
pub fn default_predictor_spec(input_dim: usize) -> MlpSpec {
    MlpSpec::new(input_dim, vec![128, 128], DEFAULT_EMBED_DIM, Activation::Tanh, 1.0)
        .expect("static spec")
}

/// Frozen random target plus the predictor distilled onto expert inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RndModel {
    pub descriptor: String,
    pub target: MlpParams,
    pub predictor: MlpParams,
    pub normalizer: Normalizer,
    pub final_train_loss: f64,
    #[serde(default = "format_version_one")]
    pub format_version: u32,
}

fn format_version_one() -> u32 {
    1
}

fn check_nonempty(data: &ExpertDataset) -> Result<()> {
    if data.n() == 0 {
        return Err(Error::EmptyDataset);
    }
    Ok(())
}

fn train_full_batch(
    mut params: MlpParams,
    batch: &[(Vec<f64>, Vec<f64>)],
    steps: usize,
    weight_decay: f64,
) -> Result<MlpParams> {
    let mut state = AdamState::new(&params, AdamHyper::default());
    for _ in 0..steps {
        let mut grads = mlp_grad(&params, batch)?;
        if weight_decay > 0.0 {
            for (gl, pl) in grads.layers.iter_mut().zip(&params.layers) {
                for (grow, prow) in gl.w.iter_mut().zip(&pl.w) {
                    for (g, p) in grow.iter_mut().zip(prow) {
                        *g += 2.0 * weight_decay * p;
                    }
                }
            }
        }
        (state, params) = adam_step(state, params, &grads)?;
    }
    Ok(params)
}

/// Fit RND: initialize and freeze the target from `seed`, then train the
/// predictor `steps` full-batch Adam steps to match the target's embeddings
/// of the normalized expert inputs.
pub fn fit_rnd(
    data: &ExpertDataset,
    target_spec: &MlpSpec,
    predictor_spec: &MlpSpec,
    steps: usize,
    seed: u64,
) -> Result<RndModel> {
    check_nonempty(data)?;
    target_spec.validate()?;
    predictor_spec.validate()?;
    if target_spec.input_dim != predictor_spec.input_dim {
        return Err(Error::ShapeMismatch {
            what: "rnd input dims",
            expected: target_spec.input_dim,
            got: predictor_spec.input_dim,
        });
    }
    if target_spec.output_dim != predictor_spec.output_dim {
        return Err(Error::ShapeMismatch {
            what: "rnd embedding dims",
            expected: target_spec.output_dim,
            got: predictor_spec.output_dim,
        });
    }
    if target_spec.input_dim != data.joint_dim() {
        return Err(Error::ShapeMismatch {
            what: "rnd data dim",
            expected: target_spec.input_dim,
            got: data.joint_dim(),
        });
    }

    let inputs = data.joint_inputs();
    let normalizer = Normalizer::fit(&inputs);
    let target = mlp_init(target_spec, split_seed(seed, "rnd.target"));
    let predictor = mlp_init(predictor_spec, split_seed(seed, "rnd.predictor"));

    let batch: Vec<(Vec<f64>, Vec<f64>)> = inputs
        .iter()
        .map(|x| {
            let z = normalizer.normalize(x)?;
            let t = mlp_forward(&target, &z)?;
            Ok((z, t))
        })
        .collect::<Result<_>>()?;

    let predictor = train_full_batch(predictor, &batch, steps, 0.0)?;
    let final_train_loss = mse_loss(&predictor, &batch)?;

    Ok(RndModel {
        descriptor: "rnd".into(),
        target,
        predictor,
        normalizer,
        final_train_loss,
        format_version: 1,
    })
}

/// Squared distance between predictor and target embeddings of `x`.
pub fn rnd_score(model: &RndModel, x: &[f64]) -> Result<f64> {
    let z = model.normalizer.normalize(x)?;
    let t = mlp_forward(&model.target, &z)?;
    let p = mlp_forward(&model.predictor, &z)?;
    Ok(t.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum())
}

impl SupportScorer for RndModel {
    fn score(&self, x: &[f64]) -> Result<f64> {
        rnd_score(self, x)
    }

    fn input_dim(&self) -> usize {
        self.target.spec.input_dim
    }

    fn descriptor(&self) -> String {
        format!(
            "rnd(embed={}, train_loss={:.3e})",
            self.target.spec.output_dim, self.final_train_loss
        )
    }
}

// ---------------------------------------------------------------------------
// Autoencoder
// ---------------------------------------------------------------------------

pub const DEFAULT_AE_WEIGHT_DECAY: f64 = 1e-4;

/// Default autoencoder architecture: input -> 128 -> 128 -> input, tanh.
pub fn default_ae_spec(input_dim: usize) -> MlpSpec {
    MlpSpec::new(input_dim, vec![128, 128], input_dim, Activation::Tanh, 1.0)
        .expect("static spec")
}

/// Overparametrized autoencoder; the l2 penalty keeps it away from the
/// trivial identity map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AeModel {
    pub descriptor: String,
    pub params: MlpParams,
    pub weight_decay: f64,
    pub normalizer: Normalizer,
    pub final_train_loss: f64,
    #[serde(default = "format_version_one")]
    pub format_version: u32,
}

/// Fit the autoencoder by Adam on reconstruction MSE plus
/// `weight_decay * ||weights||^2` over normalized expert inputs.
pub fn fit_autoencoder(
    data: &ExpertDataset,
    spec: &MlpSpec,
    weight_decay: f64,
    steps: usize,
    seed: u64,
) -> Result<AeModel> {
    check_nonempty(data)?;
    spec.validate()?;
    if spec.output_dim != spec.input_dim {
        return Err(Error::ShapeMismatch {
            what: "ae output dim",
            expected: spec.input_dim,
            got: spec.output_dim,
        });
    }
    if spec.hidden_dims.iter().any(|&h| h < spec.input_dim) {
        return Err(Error::BottleneckSpec);
    }
    if !(weight_decay > 0.0) {
        return Err(Error::RegularizationRequired);
    }
    if spec.input_dim != data.joint_dim() {
        return Err(Error::ShapeMismatch {
            what: "ae data dim",
            expected: spec.input_dim,
            got: data.joint_dim(),
        });
    }

    let inputs = data.joint_inputs();
    let normalizer = Normalizer::fit(&inputs);
    let params = mlp_init(spec, split_seed(seed, "ae.init"));
    let batch: Vec<(Vec<f64>, Vec<f64>)> = inputs
        .iter()
        .map(|x| {
            let z = normalizer.normalize(x)?;
            Ok((z.clone(), z))
        })
        .collect::<Result<_>>()?;

    let params = train_full_batch(params, &batch, steps, weight_decay)?;
    let final_train_loss = mse_loss(&params, &batch)?;

    Ok(AeModel {
        descriptor: "ae".into(),
        params,
        weight_decay,
        normalizer,
        final_train_loss,
        format_version: 1,
    })
}

/// Reconstruction error of the normalized input.
pub fn ae_score(model: &AeModel, x: &[f64]) -> Result<f64> {
    let z = model.normalizer.normalize(x)?;
    let y = mlp_forward(&model.params, &z)?;
    Ok(z.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum())
}

impl SupportScorer for AeModel {
    fn score(&self, x: &[f64]) -> Result<f64> {
        ae_score(self, x)
    }

    fn input_dim(&self) -> usize {
        self.params.spec.input_dim
    }

    fn descriptor(&self) -> String {
        format!(
            "ae(decay={:.1e}, train_loss={:.3e})",
            self.weight_decay, self.final_train_loss
        )
    }
}

// ---------------------------------------------------------------------------
// Exact set membership
// ---------------------------------------------------------------------------

/// Score 0 on pairs seen in training, 1 elsewhere: the indicator-reward
/// construction for discrete spaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExactSupportModel {
    pub descriptor: String,
    pub keys: BTreeSet<Vec<i64>>,
    pub input_dim: usize,
    #[serde(default = "format_version_one")]
    pub format_version: u32,
}

fn canonical_key(x: &[f64]) -> Result<Vec<i64>> {
    x.iter()
        .map(|&v| {
            let r = v.round();
            if (v - r).abs() > 1e-9 || !v.is_finite() {
                Err(Error::NonDiscreteInput(format!("coordinate {v}")))
            } else {
                Ok(r as i64)
            }
        })
        .collect()
}

/// Index the distinct discrete training pairs.
pub fn fit_exact(data: &ExpertDataset) -> Result<ExactSupportModel> {
    check_nonempty(data)?;
    let mut keys = BTreeSet::new();
    for x in data.joint_inputs() {
        keys.insert(canonical_key(&x)?);
    }
    Ok(ExactSupportModel {
        descriptor: "exact".into(),
        keys,
        input_dim: data.joint_dim(),
        format_version: 1,
    })
}

/// 0 if the pair was seen in training, else 1.
pub fn exact_score(model: &ExactSupportModel, x: &[f64]) -> Result<f64> {
    if x.len() != model.input_dim {
        return Err(Error::ShapeMismatch {
            what: "exact scorer input",
            expected: model.input_dim,
            got: x.len(),
        });
    }
    let key = canonical_key(x)?;
    Ok(if model.keys.contains(&key) { 0.0 } else { 1.0 })
}

impl SupportScorer for ExactSupportModel {
    fn score(&self, x: &[f64]) -> Result<f64> {
        exact_score(self, x)
    }

    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn descriptor(&self) -> String {
        format!("exact(pairs={})", self.keys.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::ActionSpace;
    use crate::envs::{
        generate_expert_dataset, grid_expert_index, simple_expert, simple_expert_index,
        DatasetSize, GridWorld, SimpleDomain,
    };

    fn simple_data(n: usize, seed: u64) -> ExpertDataset {
        let env = SimpleDomain::new(100, 0);
        generate_expert_dataset(&env, &simple_expert_index, DatasetSize::Pairs(n), seed).unwrap()
    }

    /// Flipped-action probe pairs `(s, -sign(s))`.
    fn flipped_inputs(data: &ExpertDataset) -> Vec<Vec<f64>> {
        data.pairs
            .iter()
            .map(|(s, _)| {
                let flipped = -simple_expert(s[0]);
                let enc = if flipped > 0.0 {
                    vec![0.0, 1.0]
                } else {
                    vec![1.0, 0.0]
                };
                let mut x = s.clone();
                x.extend(enc);
                x
            })
            .collect()
    }

    #[test]
    fn normalizer_round_trip() {
        let pts = vec![vec![1.0, -2.0, 5.5], vec![3.0, 0.5, 5.5], vec![-1.0, 2.0, 5.5]];
        let norm = Normalizer::fit(&pts);
        for p in &pts {
            let z = norm.normalize(p).unwrap();
            let back = norm.denormalize(&z);
            for (a, b) in p.iter().zip(&back) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
        assert!(norm.std.iter().all(|&s| s >= 1e-8));
    }

    #[test]
    fn rnd_untrained_has_positive_expert_score() {
        let data = simple_data(20, 1);
        let model = fit_rnd(
            &data,
            &default_target_spec(3),
            &default_predictor_spec(3),
            0,
            7,
        )
        .unwrap();
        let mean: f64 = data
            .joint_inputs()
            .iter()
            .map(|x| rnd_score(&model, x).unwrap())
            .sum::<f64>()
            / data.n() as f64;
        assert!(mean > 0.0);
    }

    #[test]
    fn rnd_target_is_frozen_and_fit_deterministic() {
        let data = simple_data(16, 2);
        let t_spec = default_target_spec(3);
        let p_spec = default_predictor_spec(3);
        let a = fit_rnd(&data, &t_spec, &p_spec, 200, 5).unwrap();
        let b = fit_rnd(&data, &t_spec, &p_spec, 200, 5).unwrap();
        assert_eq!(a, b);
        // Frozen target: identical to a fresh init from the same seed split.
        let fresh = mlp_init(&t_spec, split_seed(5, "rnd.target"));
        assert_eq!(a.target, fresh);
    }

    #[test]
    fn rnd_score_zero_when_predictor_copies_target() {
        let data = simple_data(8, 3);
        let spec = default_target_spec(3);
        let mut model = fit_rnd(&data, &spec, &spec, 0, 11).unwrap();
        model.predictor = model.target.clone();
        for x in data.joint_inputs() {
            assert_eq!(rnd_score(&model, &x).unwrap(), 0.0);
        }
    }

    #[test]
    fn rnd_training_separates_expert_from_flipped() {
        let data = simple_data(60, 4);
        let model = fit_rnd(
            &data,
            &default_target_spec(3),
            &default_predictor_spec(3),
            3000,
            13,
        )
        .unwrap();
        let expert_mean: f64 = data
            .joint_inputs()
            .iter()
            .map(|x| rnd_score(&model, x).unwrap())
            .sum::<f64>()
            / data.n() as f64;
        let flipped_mean: f64 = flipped_inputs(&data)
            .iter()
            .map(|x| rnd_score(&model, x).unwrap())
            .sum::<f64>()
            / data.n() as f64;
        assert!(
            expert_mean < 0.05 * flipped_mean,
            "expert {expert_mean} vs flipped {flipped_mean}"
        );
    }

    #[test]
    fn ae_preconditions() {
        let data = simple_data(10, 5);
        let bottleneck = MlpSpec::new(3, vec![2], 3, Activation::Tanh, 1.0).unwrap();
        assert_eq!(
            fit_autoencoder(&data, &bottleneck, 1e-4, 10, 0)
                .unwrap_err()
                .kind(),
            "BottleneckSpec"
        );
        let spec = default_ae_spec(3);
        assert_eq!(
            fit_autoencoder(&data, &spec, 0.0, 10, 0).unwrap_err().kind(),
            "RegularizationRequired"
        );
    }

    #[test]
    fn ae_separates_expert_from_flipped() {
        let data = simple_data(60, 6);
        let model =
            fit_autoencoder(&data, &default_ae_spec(3), DEFAULT_AE_WEIGHT_DECAY, 3000, 17)
                .unwrap();
        let expert: Vec<f64> = data
            .joint_inputs()
            .iter()
            .map(|x| ae_score(&model, x).unwrap())
            .collect();
        let flipped: Vec<f64> = flipped_inputs(&data)
            .iter()
            .map(|x| ae_score(&model, x).unwrap())
            .collect();
        assert!(crate::stats::median(&expert) < crate::stats::median(&flipped));
        assert!(crate::stats::mean(&expert) < crate::stats::mean(&flipped));
        assert!(expert.iter().all(|&s| s >= 0.0));
    }

    #[test]
    fn exact_scorer_membership() {
        let env = GridWorld::new();
        let data =
            generate_expert_dataset(&env, &grid_expert_index, DatasetSize::Trajectories(1), 0)
                .unwrap();
        let model = fit_exact(&data).unwrap();
        assert_eq!(model.keys.len(), 14);
        for x in data.joint_inputs() {
            assert_eq!(exact_score(&model, &x).unwrap(), 0.0);
        }
        // Unseen pair: down at the start.
        let unseen = vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0];
        assert_eq!(exact_score(&model, &unseen).unwrap(), 1.0);
        // Continuous input is rejected.
        let err = exact_score(&model, &[0.5, 0.0, 1.0, 0.0, 0.0, 0.0]).unwrap_err();
        assert_eq!(err.kind(), "NonDiscreteInput");
    }

    #[test]
    fn exact_fit_rejects_continuous_data() {
        let data = ExpertDataset::new(
            vec![(vec![0.5], vec![1.0, 0.0])],
            ActionSpace::Discrete { n: 2 },
            "test".into(),
            None,
        )
        .unwrap();
        assert_eq!(fit_exact(&data).unwrap_err().kind(), "NonDiscreteInput");
    }

    #[test]
    fn models_json_round_trip() {
        let data = simple_data(6, 8);
        let model = fit_rnd(
            &data,
            &MlpSpec::new(3, vec![8], 4, Activation::Tanh, 1.0).unwrap(),
            &MlpSpec::new(3, vec![8], 4, Activation::Tanh, 1.0).unwrap(),
            10,
            1,
        )
        .unwrap();
        let s = crate::jsonio::to_json_string(&model).unwrap();
        let back: RndModel = serde_json::from_str(&s).unwrap();
        assert_eq!(model, back);
    }
}
