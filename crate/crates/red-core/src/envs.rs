//! Built-in environments and expert-data generation.
//!
//! Two desk-scale tasks: a stateless 1-D domain with true reward `a * s`,
//! and a deterministic 8x8 gridworld with a fixed shortest-path expert.
//! True rewards exist only for evaluation; imitation training never sees
//! them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{ActionSpace, ExpertDataset};
use crate::error::{Error, Result};

/// One environment transition.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub next_state: Vec<f64>,
    pub reward: f64,
    pub done: bool,
}

/// Discrete-action episodic environment. Each instance owns its RNG;
/// `fork` yields an independent same-config instance for a fresh stream.
pub trait Env: Send {
    fn reset(&mut self) -> Vec<f64>;
    fn step(&mut self, action: usize) -> Result<StepOutcome>;
    fn n_actions(&self) -> usize;
    fn state_dim(&self) -> usize;
    /// One-hot action encoding used as the scorer input suffix.
    fn action_encoding(&self, action: usize) -> Vec<f64> {
        let mut e = vec![0.0; self.n_actions()];
        e[action] = 1.0;
        e
    }
    fn fork(&self, seed: u64) -> Box<dyn Env>;
    fn name(&self) -> &'static str;
}

// ---------------------------------------------------------------------------
// Simple domain
// ---------------------------------------------------------------------------

/// Action values of the simple domain, indexed by agent action id.
pub const SIMPLE_ACTIONS: [f64; 2] = [-1.0, 1.0];

pub const SIMPLE_DEFAULT_EPISODE_LEN: usize = 100;

/// True reward of the simple domain; `a` must be -1 or +1.
pub fn simple_true_reward(s: f64, a: f64) -> Result<f64> {
    if a != -1.0 && a != 1.0 {
        return Err(Error::InvalidAction(format!("expected -1 or +1, got {a}")));
    }
    Ok(a * s)
}

/// Expert policy `sign(s)`, with `sign(0) = +1`.
pub fn simple_expert(s: f64) -> f64 {
    if s >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Expert action as an agent action index.
pub fn simple_expert_index(state: &[f64]) -> usize {
    if simple_expert(state[0]) > 0.0 {
        1
    } else {
        0
    }
}

/// Stateless task: `s ~ unif(-1, 1)` redrawn every step, reward `a * s`,
/// fixed-length episodes.
pub struct SimpleDomain {
    episode_len: usize,
    rng: ChaCha8Rng,
    s: f64,
    step_idx: usize,
}

impl SimpleDomain {
    pub fn new(episode_len: usize, seed: u64) -> Self {
        let mut env = SimpleDomain {
            episode_len,
            rng: ChaCha8Rng::seed_from_u64(seed),
            s: 0.0,
            step_idx: 0,
        };
        env.s = env.draw();
        env
    }

    fn draw(&mut self) -> f64 {
        self.rng.random_range(-1.0..1.0)
    }
}

impl Env for SimpleDomain {
    fn reset(&mut self) -> Vec<f64> {
        self.s = self.draw();
        self.step_idx = 0;
        vec![self.s]
    }

    fn step(&mut self, action: usize) -> Result<StepOutcome> {
        if action >= 2 {
            return Err(Error::InvalidAction(format!("action index {action}")));
        }
        let reward = simple_true_reward(self.s, SIMPLE_ACTIONS[action])?;
        self.s = self.draw();
        self.step_idx += 1;
        Ok(StepOutcome {
            next_state: vec![self.s],
            reward,
            done: self.step_idx >= self.episode_len,
        })
    }

    fn n_actions(&self) -> usize {
        2
    }

    fn state_dim(&self) -> usize {
        1
    }

    fn fork(&self, seed: u64) -> Box<dyn Env> {
        Box::new(SimpleDomain::new(self.episode_len, seed))
    }

    fn name(&self) -> &'static str {
        "simple"
    }
}

// ---------------------------------------------------------------------------
// Gridworld
// ---------------------------------------------------------------------------

pub const GRID_WIDTH: usize = 8;
pub const GRID_HEIGHT: usize = 8;
pub const GRID_START: (usize, usize) = (0, 0);
pub const GRID_GOAL: (usize, usize) = (7, 7);
pub const GRID_MAX_STEPS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridAction {
    Up,
    Down,
    Left,
    Right,
}

impl GridAction {
    pub const ALL: [GridAction; 4] = [
        GridAction::Up,
        GridAction::Down,
        GridAction::Left,
        GridAction::Right,
    ];

    pub fn index(self) -> usize {
        match self {
            GridAction::Up => 0,
            GridAction::Down => 1,
            GridAction::Left => 2,
            GridAction::Right => 3,
        }
    }

    pub fn from_index(i: usize) -> Result<GridAction> {
        GridAction::ALL
            .get(i)
            .copied()
            .ok_or_else(|| Error::InvalidAction(format!("action index {i}")))
    }
}

/// Deterministic move with wall clipping; `done` when the goal is reached.
pub fn grid_step(pos: (usize, usize), action: GridAction) -> ((usize, usize), bool) {
    let (x, y) = pos;
    let next = match action {
        GridAction::Up => (x, (y + 1).min(GRID_HEIGHT - 1)),
        GridAction::Down => (x, y.saturating_sub(1)),
        GridAction::Left => (x.saturating_sub(1), y),
        GridAction::Right => ((x + 1).min(GRID_WIDTH - 1), y),
    };
    (next, next == GRID_GOAL)
}

/// Fixed shortest-path expert: move right until column 7, then up.
pub fn grid_expert(pos: (usize, usize)) -> GridAction {
    if pos.0 < GRID_WIDTH - 1 {
        GridAction::Right
    } else {
        GridAction::Up
    }
}

/// The expert's state-action path from start to goal (14 pairs).
pub fn grid_expert_path() -> Vec<((usize, usize), GridAction)> {
    let mut path = Vec::new();
    let mut pos = GRID_START;
    loop {
        let a = grid_expert(pos);
        path.push((pos, a));
        let (next, done) = grid_step(pos, a);
        pos = next;
        if done {
            break;
        }
    }
    path
}

pub struct GridWorld {
    pos: (usize, usize),
    steps: usize,
}

impl GridWorld {
    pub fn new() -> Self {
        GridWorld {
            pos: GRID_START,
            steps: 0,
        }
    }

    pub fn state_index(pos: (usize, usize)) -> usize {
        pos.1 * GRID_WIDTH + pos.0
    }

    pub fn n_states() -> usize {
        GRID_WIDTH * GRID_HEIGHT
    }

    pub fn state_of(pos: (usize, usize)) -> Vec<f64> {
        vec![pos.0 as f64, pos.1 as f64]
    }

    pub fn pos_of_state(state: &[f64]) -> (usize, usize) {
        (state[0] as usize, state[1] as usize)
    }
}

impl Default for GridWorld {
    fn default() -> Self {
        Self::new()
    }
}

impl Env for GridWorld {
    fn reset(&mut self) -> Vec<f64> {
        self.pos = GRID_START;
        self.steps = 0;
        Self::state_of(self.pos)
    }

    fn step(&mut self, action: usize) -> Result<StepOutcome> {
        let a = GridAction::from_index(action)?;
        let (next, at_goal) = grid_step(self.pos, a);
        self.pos = next;
        self.steps += 1;
        Ok(StepOutcome {
            next_state: Self::state_of(next),
            // True reward: 1 for the move that reaches the goal, else 0.
            reward: if at_goal { 1.0 } else { 0.0 },
            done: at_goal || self.steps >= GRID_MAX_STEPS,
        })
    }

    fn n_actions(&self) -> usize {
        4
    }

    fn state_dim(&self) -> usize {
        2
    }

    fn fork(&self, _seed: u64) -> Box<dyn Env> {
        Box::new(GridWorld::new())
    }

    fn name(&self) -> &'static str {
        "grid"
    }
}

/// Expert action for the gridworld as an agent action index.
pub fn grid_expert_index(state: &[f64]) -> usize {
    grid_expert(GridWorld::pos_of_state(state)).index()
}

// ---------------------------------------------------------------------------
// Expert dataset generation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetSize {
    Pairs(usize),
    Trajectories(usize),
}

/// Roll out `policy` on a fresh fork of `env` seeded with `seed`, collecting
/// state-action pairs until the requested size is reached.
pub fn generate_expert_dataset(
    env: &dyn Env,
    policy: &dyn Fn(&[f64]) -> usize,
    size: DatasetSize,
    seed: u64,
) -> Result<ExpertDataset> {
    let target = match size {
        DatasetSize::Pairs(n) | DatasetSize::Trajectories(n) => n,
    };
    if target == 0 {
        return Err(Error::InvalidCount);
    }
    let mut rollout_env = env.fork(seed);
    let mut pairs = Vec::new();
    let mut episodes = 0usize;
    'outer: loop {
        let mut state = rollout_env.reset();
        loop {
            let action = policy(&state);
            pairs.push((state.clone(), rollout_env.action_encoding(action)));
            if let DatasetSize::Pairs(n) = size {
                if pairs.len() >= n {
                    break 'outer;
                }
            }
            let outcome = rollout_env.step(action)?;
            state = outcome.next_state;
            if outcome.done {
                break;
            }
        }
        episodes += 1;
        if let DatasetSize::Trajectories(n) = size {
            if episodes >= n {
                break;
            }
        }
    }
    ExpertDataset::new(
        pairs,
        ActionSpace::Discrete {
            n: env.n_actions(),
        },
        format!("{}-expert", env.name()),
        Some(seed),
    )
}
