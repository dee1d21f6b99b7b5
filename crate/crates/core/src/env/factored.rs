//! A small factored MDP with an exact value-iteration solver.
//!
//! Each dimension is a line of `K` cells; every branch moves its own
//! coordinate left, stays, or moves right (clipped at the ends). The reward
//! is a sum of per-dimension cell rewards plus an optional bonus paid when
//! all coordinates sit on their best cells simultaneously.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Environment;
use crate::error::{Error, Result};
use crate::qnet::{argmax, JointAction};

const STATE_BUDGET: u64 = 10_000;
const SOLVE_BUDGET: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubMove {
    Left = 0,
    Stay = 1,
    Right = 2,
}

impl SubMove {
    pub fn from_index(k: usize) -> Result<Self> {
        match k {
            0 => Ok(SubMove::Left),
            1 => Ok(SubMove::Stay),
            2 => Ok(SubMove::Right),
            _ => Err(Error::Validation(format!("sub-move index {k} outside [0, 3)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactoredMdp {
    positions: usize,
    /// `rewards[i][k]`: reward for dimension `i` sitting at cell `k`.
    rewards: Vec<Vec<f64>>,
    coupling: f64,
    gamma: f64,
    best: Vec<usize>,
}

impl FactoredMdp {
    pub fn new(rewards: Vec<Vec<f64>>, coupling: f64, gamma: f64) -> Result<Self> {
        let n = rewards.len();
        if n == 0 {
            return Err(Error::Config("factored MDP needs at least one dimension".into()));
        }
        let k = rewards[0].len();
        if k == 0 || rewards.iter().any(|r| r.len() != k) {
            return Err(Error::Config("every dimension needs the same positive cell count".into()));
        }
        if rewards.iter().flatten().any(|r| !r.is_finite()) || !coupling.is_finite() {
            return Err(Error::Config("rewards must be finite".into()));
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::Config(format!("discount {gamma} outside [0, 1)")));
        }
        let states = pow(k as u64, n as u32);
        let actions = pow(3, n as u32);
        if states > STATE_BUDGET || actions > STATE_BUDGET {
            return Err(Error::Resource {
                required: states.max(actions),
                budget: STATE_BUDGET,
            });
        }
        let best = rewards.iter().map(|r| argmax(r)).collect();
        Ok(FactoredMdp {
            positions: k,
            rewards,
            coupling,
            gamma,
            best,
        })
    }

    /// Cell rewards drawn uniformly from `[0, 1)` with a seeded generator.
    pub fn random(dims: usize, positions: usize, coupling: f64, gamma: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rewards = (0..dims)
            .map(|_| (0..positions).map(|_| rng.gen_range(0.0..1.0)).collect())
            .collect();
        Self::new(rewards, coupling, gamma)
    }

    pub fn dims(&self) -> usize {
        self.rewards.len()
    }

    pub fn positions(&self) -> usize {
        self.positions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn rewards(&self) -> &[Vec<f64>] {
        &self.rewards
    }

    /// Per-dimension best cell (lowest index on ties).
    pub fn best_cells(&self) -> &[usize] {
        &self.best
    }

    pub fn joint_states(&self) -> usize {
        pow(self.positions as u64, self.dims() as u32) as usize
    }

    pub fn joint_actions(&self) -> usize {
        pow(3, self.dims() as u32) as usize
    }

    /// Mixed-radix index, dimension 0 most significant.
    pub fn state_index(&self, cells: &[usize]) -> usize {
        cells.iter().fold(0, |acc, &c| acc * self.positions + c)
    }

    pub fn state_from_index(&self, mut index: usize) -> Vec<usize> {
        let mut cells = vec![0; self.dims()];
        for c in cells.iter_mut().rev() {
            *c = index % self.positions;
            index /= self.positions;
        }
        cells
    }

    pub fn action_index(&self, action: &JointAction) -> usize {
        action.indices.iter().fold(0, |acc, &m| acc * 3 + m)
    }

    pub fn action_from_index(&self, mut index: usize) -> JointAction {
        let mut idx = vec![0; self.dims()];
        for m in idx.iter_mut().rev() {
            *m = index % 3;
            index /= 3;
        }
        JointAction::new(idx)
    }

    /// Reward collected on arriving at `cells`.
    pub fn reward(&self, cells: &[usize]) -> f64 {
        let base: f64 = cells.iter().zip(&self.rewards).map(|(&c, r)| r[c]).sum();
        if self.coupling != 0.0 && cells == self.best.as_slice() {
            base + self.coupling
        } else {
            base
        }
    }

    /// Deterministic transition; returns the next cells and the reward
    /// collected there.
    pub fn step(&self, cells: &[usize], action: &JointAction) -> Result<(Vec<usize>, f64)> {
        if cells.len() != self.dims() {
            return Err(Error::dim("factored state", self.dims(), cells.len()));
        }
        action.validate(self.dims(), 3)?;
        if let Some(&c) = cells.iter().find(|&&c| c >= self.positions) {
            return Err(Error::Validation(format!("cell {c} outside [0, {})", self.positions)));
        }
        let next: Vec<usize> = cells
            .iter()
            .zip(&action.indices)
            .map(|(&c, &m)| match m {
                0 => c.saturating_sub(1),
                1 => c,
                _ => (c + 1).min(self.positions - 1),
            })
            .collect();
        let r = self.reward(&next);
        Ok((next, r))
    }

    /// The one-dimensional MDP of dimension `i` alone (no coupling).
    pub fn dimension(&self, i: usize) -> Result<FactoredMdp> {
        FactoredMdp::new(vec![self.rewards[i].clone()], 0.0, self.gamma)
    }
}

fn pow(base: u64, exp: u32) -> u64 {
    base.saturating_pow(exp)
}

/// Tabular optimal action values over joint states and joint actions.
#[derive(Debug, Clone, PartialEq)]
pub struct QStar {
    values: Vec<f64>,
    states: usize,
    actions: usize,
    /// Sup-norm change per sweep, `‖Q_{k+1} − Q_k‖∞`.
    pub residuals: Vec<f64>,
}

impl QStar {
    pub fn q(&self, state: usize, action: usize) -> f64 {
        self.values[state * self.actions + action]
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.values[state * self.actions..(state + 1) * self.actions]
    }

    pub fn value(&self, state: usize) -> f64 {
        self.row(state).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    /// Greedy joint-action index (lowest on ties).
    pub fn greedy(&self, state: usize) -> usize {
        argmax(self.row(state))
    }

    /// Whether `action` attains the optimum at `state` within `tol`.
    pub fn is_optimal(&self, state: usize, action: usize, tol: f64) -> bool {
        self.q(state, action) >= self.value(state) - tol
    }
}

/// Iterates `Q ← R + γ·max Q(next, ·)` from zero until the sup-norm change
/// drops below `tol`.
pub fn value_iteration(mdp: &FactoredMdp, gamma: f64, tol: f64) -> Result<QStar> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::Config(format!("discount {gamma} outside [0, 1)")));
    }
    if !(tol > 0.0) {
        return Err(Error::Config("tolerance must be positive".into()));
    }
    let states = mdp.joint_states();
    let actions = mdp.joint_actions();
    let entries = states as u64 * actions as u64;
    if entries > SOLVE_BUDGET {
        return Err(Error::Resource {
            required: entries,
            budget: SOLVE_BUDGET,
        });
    }

    let mut next_state = vec![0usize; states * actions];
    let mut reward = vec![0.0; states * actions];
    for s in 0..states {
        let cells = mdp.state_from_index(s);
        for a in 0..actions {
            let (next, r) = mdp.step(&cells, &mdp.action_from_index(a))?;
            next_state[s * actions + a] = mdp.state_index(&next);
            reward[s * actions + a] = r;
        }
    }

    let mut q = vec![0.0; states * actions];
    let mut v = vec![0.0; states];
    let mut residuals = Vec::new();
    // Bounded by the contraction rate; the cap only guards against tol below
    // floating-point resolution.
    for _ in 0..100_000 {
        let mut delta: f64 = 0.0;
        for k in 0..states * actions {
            let updated = reward[k] + gamma * v[next_state[k]];
            delta = delta.max((updated - q[k]).abs());
            q[k] = updated;
        }
        for s in 0..states {
            v[s] = q[s * actions..(s + 1) * actions]
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
        }
        residuals.push(delta);
        if delta < tol {
            return Ok(QStar {
                values: q,
                states,
                actions,
                residuals,
            });
        }
    }
    Err(Error::Numeric {
        context: "value iteration did not reach the tolerance".into(),
        index: None,
    })
}

/// Episodic wrapper: uniform random start cell, fixed horizon, one-hot
/// observation per dimension.
#[derive(Debug, Clone)]
pub struct FactoredEnv {
    mdp: FactoredMdp,
    cells: Vec<usize>,
    horizon: usize,
    steps: usize,
}

impl FactoredEnv {
    pub fn new(mdp: FactoredMdp, horizon: usize) -> Self {
        let cells = vec![0; mdp.dims()];
        FactoredEnv {
            mdp,
            cells,
            horizon,
            steps: 0,
        }
    }

    pub fn mdp(&self) -> &FactoredMdp {
        &self.mdp
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    /// One-hot encoding of `cells`, as returned by [`Environment::state`].
    pub fn encode(mdp: &FactoredMdp, cells: &[usize]) -> Vec<f64> {
        let k = mdp.positions();
        let mut obs = vec![0.0; mdp.dims() * k];
        for (i, &c) in cells.iter().enumerate() {
            obs[i * k + c] = 1.0;
        }
        obs
    }
}

impl Environment for FactoredEnv {
    fn state_dim(&self) -> usize {
        self.mdp.dims() * self.mdp.positions()
    }

    fn branches(&self) -> usize {
        self.mdp.dims()
    }

    fn sub_actions(&self) -> usize {
        3
    }

    fn initialize(&mut self, rng: &mut dyn RngCore) {
        for c in &mut self.cells {
            *c = rng.gen_range(0..self.mdp.positions());
        }
        self.steps = 0;
    }

    fn state(&self) -> Vec<f64> {
        Self::encode(&self.mdp, &self.cells)
    }

    fn execute(&mut self, action: &JointAction) -> Result<f64> {
        let (next, r) = self.mdp.step(&self.cells, action)?;
        self.cells = next;
        self.steps += 1;
        Ok(r)
    }

    fn is_terminated(&self) -> bool {
        self.steps >= self.horizon
    }
}
