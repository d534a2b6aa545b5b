//! Behavioral cloning: supervised learning of the expert's state-to-action
//! map, used as an imitation baseline.

use crate::dataset::{ActionSpace, ExpertDataset};
use crate::error::{Error, Result};
use crate::nn::{adam_step, grad_with, AdamHyper, AdamState, MlpSpec};
use crate::seeding::split_seed;

use super::MlpPolicy;

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Fit a softmax policy by full-batch Adam on cross-entropy over the expert
/// pairs; returns the greedy (argmax-logit) policy.
pub fn behavioral_cloning(
    data: &ExpertDataset,
    spec: &MlpSpec,
    steps: usize,
    seed: u64,
) -> Result<MlpPolicy> {
    if data.n() == 0 {
        return Err(Error::EmptyDataset);
    }
    spec.validate()?;
    let n_actions = match data.action_space {
        ActionSpace::Discrete { n } => n,
        ActionSpace::Continuous { .. } => {
            return Err(Error::InvalidSpec(
                "behavioral cloning supports discrete action spaces".into(),
            ))
        }
    };
    if spec.input_dim != data.state_dim() {
        return Err(Error::ShapeMismatch {
            what: "bc input",
            expected: data.state_dim(),
            got: spec.input_dim,
        });
    }
    if spec.output_dim != n_actions {
        return Err(Error::ShapeMismatch {
            what: "bc logits",
            expected: n_actions,
            got: spec.output_dim,
        });
    }

    let states: Vec<Vec<f64>> = data.pairs.iter().map(|(s, _)| s.clone()).collect();
    let actions: Vec<usize> = data
        .pairs
        .iter()
        .map(|(_, enc)| super::argmax(enc))
        .collect();

    let mut params = crate::nn::mlp_init(spec, split_seed(seed, "bc.init"));
    let mut adam = AdamState::new(&params, AdamHyper::default());
    let scale = 1.0 / data.n() as f64;
    for _ in 0..steps {
        let grads = grad_with(&params, &states, |i, out, dout| {
            let p = softmax(out);
            for (j, d) in dout.iter_mut().enumerate() {
                let target = if j == actions[i] { 1.0 } else { 0.0 };
                *d = scale * (p[j] - target);
            }
        })?;
        (adam, params) = adam_step(adam, params, &grads)?;
    }
    Ok(MlpPolicy { params })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{
        generate_expert_dataset, simple_expert, simple_expert_index, DatasetSize, SimpleDomain,
    };
    use crate::nn::Activation;
    use crate::rl::DiscretePolicy;

    fn bc_spec() -> MlpSpec {
        MlpSpec::new(1, vec![32, 32], 2, Activation::Tanh, 1.0).unwrap()
    }

    #[test]
    fn memorizes_a_single_pair() {
        let data = crate::dataset::ExpertDataset::new(
            vec![(vec![0.5], vec![0.0, 1.0])],
            crate::dataset::ActionSpace::Discrete { n: 2 },
            "test".into(),
            None,
        )
        .unwrap();
        let policy = behavioral_cloning(&data, &bc_spec(), 500, 0).unwrap();
        assert_eq!(policy.act(&[0.5]), 1);
    }

    #[test]
    fn recovers_sign_policy_from_100_pairs() {
        let env = SimpleDomain::new(100, 0);
        let data =
            generate_expert_dataset(&env, &simple_expert_index, DatasetSize::Pairs(100), 11)
                .unwrap();
        let policy = behavioral_cloning(&data, &bc_spec(), 3000, 1).unwrap();
        let mut correct = 0;
        let mut total = 0;
        for i in 0..201 {
            let s = -1.0 + i as f64 / 100.0;
            if s.abs() <= 0.05 {
                continue;
            }
            total += 1;
            let want = if simple_expert(s) > 0.0 { 1 } else { 0 };
            if policy.act(&[s]) == want {
                correct += 1;
            }
        }
        assert!(
            correct as f64 >= 0.95 * total as f64,
            "{correct}/{total} grid points matched"
        );
    }

    #[test]
    fn dim_mismatch_rejected() {
        let data = crate::dataset::ExpertDataset::new(
            vec![(vec![0.5, 0.1], vec![0.0, 1.0])],
            crate::dataset::ActionSpace::Discrete { n: 2 },
            "test".into(),
            None,
        )
        .unwrap();
        assert_eq!(
            behavioral_cloning(&data, &bc_spec(), 10, 0)
                .unwrap_err()
                .kind(),
            "ShapeMismatch"
        );
    }
}
