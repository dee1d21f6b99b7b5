//! Torque-limited pendulum swing-up. `theta = 0` is upright.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, RngCore};

use super::{wrap_angle, ActionGrid, Environment};
use crate::error::{Error, Result};
use crate::qnet::JointAction;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendulumParams {
    pub dt: f64,
    pub gravity: f64,
    pub mass: f64,
    pub length: f64,
    pub max_torque: f64,
    pub max_speed: f64,
    pub horizon: usize,
}

impl Default for PendulumParams {
    fn default() -> Self {
        PendulumParams {
            dt: 0.05,
            gravity: 10.0,
            mass: 1.0,
            length: 1.0,
            max_torque: 2.0,
            max_speed: 8.0,
            horizon: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendulumState {
    /// Radians in `(−π, π]`.
    pub theta: f64,
    /// Radians per second in `[−max_speed, max_speed]`.
    pub theta_dot: f64,
}

/// One semi-implicit Euler step. The reward is charged on the pre-step
/// angle and velocity and the clipped torque.
pub fn pendulum_step(state: PendulumState, torque: f64, p: &PendulumParams) -> Result<(PendulumState, f64)> {
    if !state.theta.is_finite() || !state.theta_dot.is_finite() || !torque.is_finite() {
        return Err(Error::Numeric {
            context: "pendulum step input".into(),
            index: None,
        });
    }
    let u = torque.clamp(-p.max_torque, p.max_torque);
    let th = wrap_angle(state.theta);
    let reward = -(th * th + 0.1 * state.theta_dot * state.theta_dot + 0.001 * u * u);

    let accel = 3.0 * p.gravity / (2.0 * p.length) * libm::sin(state.theta)
        + 3.0 / (p.mass * p.length * p.length) * u;
    let theta_dot = (state.theta_dot + accel * p.dt).clamp(-p.max_speed, p.max_speed);
    let theta = wrap_angle(state.theta + theta_dot * p.dt);
    Ok((PendulumState { theta, theta_dot }, reward))
}

/// Pendulum with a single discretized torque dimension. Observations are
/// `(cos θ, sin θ, θ̇)`.
#[derive(Debug, Clone)]
pub struct Pendulum {
    params: PendulumParams,
    grid: ActionGrid,
    state: PendulumState,
    steps: usize,
}

impl Pendulum {
    pub fn new(bins: usize, params: PendulumParams) -> Result<Self> {
        let grid = ActionGrid::uniform(1, -params.max_torque, params.max_torque, bins)?;
        Ok(Pendulum {
            params,
            grid,
            state: PendulumState {
                theta: PI,
                theta_dot: 0.0,
            },
            steps: 0,
        })
    }

    pub fn physical_state(&self) -> PendulumState {
        self.state
    }

    pub fn set_physical_state(&mut self, state: PendulumState) {
        self.state = state;
        self.steps = 0;
    }

    pub fn grid(&self) -> &ActionGrid {
        &self.grid
    }
}

impl Environment for Pendulum {
    fn state_dim(&self) -> usize {
        3
    }

    fn branches(&self) -> usize {
        1
    }

    fn sub_actions(&self) -> usize {
        self.grid.dims()[0].bins
    }

    fn initialize(&mut self, rng: &mut dyn RngCore) {
        self.state = PendulumState {
            theta: rng.gen_range(-PI..PI),
            theta_dot: rng.gen_range(-1.0..1.0),
        };
        self.steps = 0;
    }

    fn state(&self) -> Vec<f64> {
        vec![
            libm::cos(self.state.theta),
            libm::sin(self.state.theta),
            self.state.theta_dot,
        ]
    }

    fn execute(&mut self, action: &JointAction) -> Result<f64> {
        let torque = self.grid.decode(action)?[0];
        let (next, reward) = pendulum_step(self.state, torque, &self.params)?;
        self.state = next;
        self.steps += 1;
        Ok(reward)
    }

    fn is_terminated(&self) -> bool {
        self.steps >= self.params.horizon
    }
}
