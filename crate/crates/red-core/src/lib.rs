//! Imitation learning via expert-policy support estimation.
//!
//! The pipeline: fit a support scorer on expert state-action pairs (kernel
//! PCA, random network distillation, an overparametrized autoencoder, or an
//! exact lookup for discrete spaces), turn its scores into the fixed reward
//! `exp(-sigma1 * L)`, and train a standard RL agent against that reward.
//! Because the reward never changes during RL, imitation reduces to ordinary
//! reinforcement learning, with the true environment reward reserved for
//! evaluation.
//!
//! Modules:
//! - [`nn`]: dense networks, backprop, Adam, finite-difference oracle
//! - [`kernel`]: kernel-PCA support estimation
//! - [`estimators`]: RND / autoencoder / exact-set scorers, one contract
//! - [`reward`]: score-to-reward calibration and the terminal heuristic
//! - [`envs`] and [`dataset`]: built-in tasks and expert data
//! - [`rl`]: DQN, tabular Q-learning, behavioral cloning, evaluation
//! - [`harness`]: config-driven pipeline commands and artifacts

pub mod dataset;
pub mod envs;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod jsonio;
pub mod kernel;
pub mod nn;
pub mod reward;
pub mod rl;
pub mod seeding;
pub mod stats;

pub use dataset::{ActionSpace, ExpertDataset};
pub use error::{Error, Result};
pub use estimators::SupportScorer;
pub use reward::RewardModel;
