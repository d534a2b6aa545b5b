//! RL agents and imitation baselines that consume a [`RewardModel`]:
//! deep Q-learning for the simple domain, tabular Q-learning for the
//! gridworld, behavioral cloning, and greedy policy evaluation against the
//! environment's true reward.
//!
//! Agents act on action indices; reward models score the joint
//! `concat(state, one_hot(action))` input. The true environment reward is
//! used exclusively by evaluation.

mod bc;
mod dqn;
mod replay;
mod tabular;

pub use bc::behavioral_cloning;
pub use dqn::{dqn_train, DqnConfig, DqnOutcome};
pub use replay::{ReplayBuffer, Transition};
pub use tabular::{tabular_q_train, TabularConfig, TabularOutcome, TabularQ};

use crate::envs::Env;
use crate::error::{Error, Result};
use crate::nn::{mlp_forward, MlpParams};
use crate::stats;

/// Deterministic greedy policy over discrete actions.
pub trait DiscretePolicy {
    fn act(&self, state: &[f64]) -> usize;
}

/// Argmax policy over the outputs of a dense network (Q-values or logits).
#[derive(Debug, Clone, PartialEq)]
pub struct MlpPolicy {
    pub params: MlpParams,
}

impl DiscretePolicy for MlpPolicy {
    fn act(&self, state: &[f64]) -> usize {
        let out = mlp_forward(&self.params, state).expect("policy input dim");
        argmax(&out)
    }
}

pub(crate) fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in xs.iter().enumerate().skip(1) {
        if v > xs[best] {
            best = i;
        }
    }
    best
}

/// One learning-curve row: greedy-policy performance under the true reward.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CurvePoint {
    pub env_step: usize,
    pub true_reward_per_step: f64,
    pub true_reward_per_episode: f64,
    pub eval_std: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalStats {
    pub per_episode_mean: f64,
    pub per_step_mean: f64,
    pub per_episode_std: f64,
}

/// Greedy rollouts on a fresh fork of `env` under the true reward.
/// Evaluation owns its RNG stream, so it never perturbs training randomness.
pub fn evaluate_policy(
    env: &dyn Env,
    policy: &dyn DiscretePolicy,
    n_episodes: usize,
    seed: u64,
) -> Result<EvalStats> {
    if n_episodes == 0 {
        return Err(Error::InvalidCount);
    }
    let mut eval_env = env.fork(seed);
    let mut returns = Vec::with_capacity(n_episodes);
    let mut total_steps = 0usize;
    let mut total_reward = 0.0;
    for _ in 0..n_episodes {
        let mut state = eval_env.reset();
        let mut ep_return = 0.0;
        loop {
            let action = policy.act(&state);
            let out = eval_env.step(action)?;
            ep_return += out.reward;
            total_reward += out.reward;
            total_steps += 1;
            state = out.next_state;
            if out.done {
                break;
            }
        }
        returns.push(ep_return);
    }
    Ok(EvalStats {
        per_episode_mean: stats::mean(&returns),
        per_step_mean: total_reward / total_steps as f64,
        per_episode_std: stats::std_dev(&returns),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{simple_expert_index, SimpleDomain};

    struct FnPolicy<F: Fn(&[f64]) -> usize>(F);

    impl<F: Fn(&[f64]) -> usize> DiscretePolicy for FnPolicy<F> {
        fn act(&self, state: &[f64]) -> usize {
            (self.0)(state)
        }
    }

    #[test]
    fn expert_policy_scores_half_per_step() {
        let env = SimpleDomain::new(100, 0);
        let stats = evaluate_policy(&env, &FnPolicy(simple_expert_index), 100, 7).unwrap();
        assert!(
            (0.48..=0.52).contains(&stats.per_step_mean),
            "per-step {}",
            stats.per_step_mean
        );
        assert!((48.0..=52.0).contains(&stats.per_episode_mean));
    }

    #[test]
    fn anti_expert_scores_minus_half() {
        let env = SimpleDomain::new(100, 0);
        let anti = FnPolicy(|s: &[f64]| 1 - simple_expert_index(s));
        let stats = evaluate_policy(&env, &anti, 100, 7).unwrap();
        assert!((-0.52..=-0.48).contains(&stats.per_step_mean));
    }

    #[test]
    fn constant_policy_scores_near_zero() {
        let env = SimpleDomain::new(100, 0);
        let constant = FnPolicy(|_: &[f64]| 1);
        let stats = evaluate_policy(&env, &constant, 100, 7).unwrap();
        assert!(
            stats.per_step_mean.abs() <= 0.05,
            "per-step {}",
            stats.per_step_mean
        );
    }

    #[test]
    fn zero_episodes_rejected() {
        let env = SimpleDomain::new(100, 0);
        let constant = FnPolicy(|_: &[f64]| 0);
        assert_eq!(
            evaluate_policy(&env, &constant, 0, 7).unwrap_err().kind(),
            "InvalidCount"
        );
    }
}
