//! Point-mass reacher with one force dimension per axis.
//!
//! Axes evolve independently; they interact only through the shared
//! distance term in the reward.

use alloc::vec::Vec;

use rand::{Rng, RngCore};

use super::{ActionGrid, Environment};
use crate::error::{Error, Result};
use crate::qnet::JointAction;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReacherParams {
    pub friction: f64,
    pub gain: f64,
    pub max_speed: f64,
    pub dt: f64,
    pub effort_cost: f64,
    pub horizon: usize,
}

impl Default for ReacherParams {
    fn default() -> Self {
        ReacherParams {
            friction: 0.95,
            gain: 0.2,
            max_speed: 2.0,
            dt: 0.05,
            effort_cost: 0.001,
            horizon: 300,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReacherState {
    pub positions: Vec<f64>,
    pub velocities: Vec<f64>,
    pub target: Vec<f64>,
}

/// `v′ = clip(friction·v + gain·f)`, `p′ = p + dt·v′`,
/// reward `−‖p′ − target‖ − effort·‖f‖²`. Forces are clipped to `[−1, 1]`.
pub fn reacher_step(state: &ReacherState, forces: &[f64], p: &ReacherParams) -> Result<(ReacherState, f64)> {
    let n = state.positions.len();
    if forces.len() != n {
        return Err(Error::dim("reacher forces", n, forces.len()));
    }
    if state.velocities.len() != n || state.target.len() != n {
        return Err(Error::dim("reacher state", n, state.velocities.len().min(state.target.len())));
    }
    let mut next = state.clone();
    let mut dist2 = 0.0;
    let mut effort = 0.0;
    for i in 0..n {
        let f = forces[i].clamp(-1.0, 1.0);
        let v = (p.friction * state.velocities[i] + p.gain * f).clamp(-p.max_speed, p.max_speed);
        let x = state.positions[i] + p.dt * v;
        next.velocities[i] = v;
        next.positions[i] = x;
        let d = x - state.target[i];
        dist2 += d * d;
        effort += f * f;
    }
    let reward = -libm::sqrt(dist2) - p.effort_cost * effort;
    if !reward.is_finite() {
        return Err(Error::Numeric {
            context: "reacher reward".into(),
            index: None,
        });
    }
    Ok((next, reward))
}

/// `n`-axis reacher; observations are `positions ‖ velocities ‖ target`.
#[derive(Debug, Clone)]
pub struct Reacher {
    params: ReacherParams,
    grid: ActionGrid,
    state: ReacherState,
    steps: usize,
}

impl Reacher {
    pub fn new(dims: usize, bins: usize, params: ReacherParams) -> Result<Self> {
        let grid = ActionGrid::uniform(dims, -1.0, 1.0, bins)?;
        Ok(Reacher {
            params,
            grid,
            state: ReacherState {
                positions: alloc::vec![0.0; dims],
                velocities: alloc::vec![0.0; dims],
                target: alloc::vec![0.0; dims],
            },
            steps: 0,
        })
    }

    pub fn physical_state(&self) -> &ReacherState {
        &self.state
    }
}

impl Environment for Reacher {
    fn state_dim(&self) -> usize {
        3 * self.grid.len()
    }

    fn branches(&self) -> usize {
        self.grid.len()
    }

    fn sub_actions(&self) -> usize {
        self.grid.dims()[0].bins
    }

    fn initialize(&mut self, rng: &mut dyn RngCore) {
        for i in 0..self.grid.len() {
            self.state.positions[i] = rng.gen_range(-1.0..1.0);
            self.state.velocities[i] = 0.0;
            self.state.target[i] = rng.gen_range(-1.0..1.0);
        }
        self.steps = 0;
    }

    fn state(&self) -> Vec<f64> {
        let s = &self.state;
        s.positions
            .iter()
            .chain(&s.velocities)
            .chain(&s.target)
            .copied()
            .collect()
    }

    fn execute(&mut self, action: &JointAction) -> Result<f64> {
        let forces = self.grid.decode(action)?;
        let (next, reward) = reacher_step(&self.state, &forces, &self.params)?;
        self.state = next;
        self.steps += 1;
        Ok(reward)
    }

    fn is_terminated(&self) -> bool {
        self.steps >= self.params.horizon
    }
}
