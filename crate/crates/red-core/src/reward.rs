//! From support scores to rewards.
//!
//! The reward map is `r(x) = exp(-sigma1 * L(x))` with `sigma1` calibrated
//! so expert pairs land mostly near reward 1. A separate linear variant
//! `1 - alpha1 * L` exists for reward-map visualization, and an optional
//! terminal penalty discourages ending an episode far from the estimated
//! support.

use crate::dataset::ExpertDataset;
use crate::error::{Error, Result};
use crate::estimators::SupportScorer;
use crate::stats::quantile;

/// Terminal-penalty hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerminalParams {
    pub sigma2: f64,
    pub sigma3: f64,
}

impl TerminalParams {
    pub fn new(sigma2: f64, sigma3: f64) -> Result<Self> {
        if !(sigma2 >= 0.0 && sigma2.is_finite()) {
            return Err(Error::InvalidSpec("sigma2 must be >= 0".into()));
        }
        if !(0.0..=1.0).contains(&sigma3) {
            return Err(Error::InvalidSpec("sigma3 must be in [0, 1]".into()));
        }
        Ok(TerminalParams { sigma2, sigma3 })
    }
}

/// Choose `sigma1` so the q-quantile expert loss maps to reward `rho`;
/// at least a fraction q of expert pairs then receive reward >= rho.
/// A flat loss list (quantile 0) falls back to `sigma1 = 1`.
pub fn calibrate_sigma1(expert_losses: &[f64], rho: f64, q: f64) -> Result<f64> {
    if expert_losses.is_empty() {
        return Err(Error::EmptyLosses);
    }
    if expert_losses.iter().any(|&l| l < 0.0) {
        return Err(Error::NegativeLoss);
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidSpec("rho must be in (0, 1)".into()));
    }
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::InvalidSpec("q must be in (0, 1]".into()));
    }
    let lq = quantile(expert_losses, q);
    if lq == 0.0 {
        return Ok(1.0);
    }
    // The 1e-12 shave keeps exp(-sigma1 * lq) >= rho under roundoff, so the
    // calibration guarantee holds exactly on the quantile pair itself.
    Ok(-rho.ln() / lq * (1.0 - 1e-12))
}

/// `exp(-sigma1 * L)`, the fixed per-step reward in [0, 1].
pub fn red_reward(sigma1: f64, loss: f64) -> Result<f64> {
    if loss < 0.0 || loss.is_nan() {
        return Err(Error::NegativeLoss);
    }
    debug_assert!(sigma1 > 0.0, "sigma1 must be positive");
    Ok((-sigma1 * loss).exp())
}

/// `1 - alpha1 * L`, unclamped; used only for reward-map visualization.
pub fn viz_reward(alpha1: f64, loss: f64) -> f64 {
    1.0 - alpha1 * loss
}

/// Episode-end adjustment: `-sigma2 * r_bar` when the final-step reward
/// falls below `sigma3 * r_bar`, else 0.
pub fn terminal_reward(r_bar: f64, params: &TerminalParams, r_final: f64) -> f64 {
    if r_final < params.sigma3 * r_bar {
        -(params.sigma2 * r_bar)
    } else {
        0.0
    }
}

/// Calibrated reward map over a fitted scorer. Immutable; thread-safe.
pub struct RewardModel {
    scorer: Box<dyn SupportScorer>,
    pub sigma1: f64,
    pub r_bar: f64,
    pub terminal: Option<TerminalParams>,
}

impl RewardModel {
    /// Wrap a scorer with an explicit `sigma1` and expert mean reward.
    pub fn new(
        scorer: Box<dyn SupportScorer>,
        sigma1: f64,
        r_bar: f64,
        terminal: Option<TerminalParams>,
    ) -> Result<Self> {
        if !(sigma1 > 0.0 && sigma1.is_finite()) {
            return Err(Error::InvalidSpec("sigma1 must be positive".into()));
        }
        if !(0.0..=1.0).contains(&r_bar) {
            return Err(Error::InvalidSpec("r_bar must be in [0, 1]".into()));
        }
        Ok(RewardModel {
            scorer,
            sigma1,
            r_bar,
            terminal,
        })
    }

    /// Calibrate `sigma1` from the scorer's losses on the expert data and
    /// compute the expert mean reward. Returns the model and the per-pair
    /// losses used for calibration.
    pub fn calibrate(
        scorer: Box<dyn SupportScorer>,
        data: &ExpertDataset,
        rho: f64,
        q: f64,
        terminal: Option<TerminalParams>,
    ) -> Result<(Self, Vec<f64>)> {
        let losses: Vec<f64> = data
            .joint_inputs()
            .iter()
            .map(|x| scorer.score(x))
            .collect::<Result<_>>()?;
        let sigma1 = calibrate_sigma1(&losses, rho, q)?;
        let mut model = RewardModel {
            scorer,
            sigma1,
            r_bar: 0.0,
            terminal,
        };
        model.r_bar = mean_expert_reward(&model, data)?;
        Ok((model, losses))
    }

    /// Per-step reward for a joint state-action input.
    pub fn step_reward(&self, joint: &[f64]) -> Result<f64> {
        red_reward(self.sigma1, self.scorer.score(joint)?)
    }

    /// Visualization reward `1 - alpha1 * L` for a joint input.
    pub fn step_viz_reward(&self, alpha1: f64, joint: &[f64]) -> Result<f64> {
        Ok(viz_reward(alpha1, self.scorer.score(joint)?))
    }

    /// Episode-end adjustment for the final per-step reward; 0 when the
    /// terminal heuristic is disabled.
    pub fn terminal_adjustment(&self, r_final: f64) -> f64 {
        match &self.terminal {
            Some(p) => terminal_reward(self.r_bar, p, r_final),
            None => 0.0,
        }
    }

    pub fn scorer(&self) -> &dyn SupportScorer {
        self.scorer.as_ref()
    }
}

/// Mean of `exp(-sigma1 * L)` over the expert pairs.
pub fn mean_expert_reward(model: &RewardModel, data: &ExpertDataset) -> Result<f64> {
    if data.n() == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut total = 0.0;
    for x in data.joint_inputs() {
        total += model.step_reward(&x)?;
    }
    Ok(total / data.n() as f64)
}
