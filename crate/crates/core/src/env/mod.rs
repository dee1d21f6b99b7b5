//! Environments with rectangular discrete action spaces.
//!
//! Every environment follows the same life cycle: `initialize`, then
//! `execute` until `is_terminated`, reading observations with `state`.

mod factored;
mod pendulum;
mod reacher;

use alloc::format;
use alloc::vec::Vec;

use rand::RngCore;

use crate::error::{Error, Result};
use crate::qnet::JointAction;

pub use factored::{value_iteration, FactoredEnv, FactoredMdp, QStar, SubMove};
pub use pendulum::{pendulum_step, Pendulum, PendulumParams, PendulumState};
pub use reacher::{reacher_step, Reacher, ReacherParams, ReacherState};

pub trait Environment {
    fn state_dim(&self) -> usize;
    fn branches(&self) -> usize;
    fn sub_actions(&self) -> usize;

    /// Starts a new episode.
    fn initialize(&mut self, rng: &mut dyn RngCore);
    /// Current observation.
    fn state(&self) -> Vec<f64>;
    /// Applies `action` and returns the reward.
    fn execute(&mut self, action: &JointAction) -> Result<f64>;
    /// True once the episode is over, whether by reaching an absorbing
    /// state or by the step limit.
    fn is_terminated(&self) -> bool;
    /// True only for absorbing states; a step-limit cutoff is not terminal
    /// and still bootstraps.
    fn is_terminal(&self) -> bool {
        false
    }
}

impl<E: Environment + ?Sized> Environment for alloc::boxed::Box<E> {
    fn state_dim(&self) -> usize {
        (**self).state_dim()
    }
    fn branches(&self) -> usize {
        (**self).branches()
    }
    fn sub_actions(&self) -> usize {
        (**self).sub_actions()
    }
    fn initialize(&mut self, rng: &mut dyn RngCore) {
        (**self).initialize(rng)
    }
    fn state(&self) -> Vec<f64> {
        (**self).state()
    }
    fn execute(&mut self, action: &JointAction) -> Result<f64> {
        (**self).execute(action)
    }
    fn is_terminated(&self) -> bool {
        (**self).is_terminated()
    }
    fn is_terminal(&self) -> bool {
        (**self).is_terminal()
    }
}

/// Uniform per-dimension discretization of a continuous control box.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionGrid {
    dims: Vec<GridDim>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridDim {
    pub low: f64,
    pub high: f64,
    pub bins: usize,
}

impl ActionGrid {
    pub fn new(dims: Vec<GridDim>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::Config("action grid needs at least one dimension".into()));
        }
        for (i, d) in dims.iter().enumerate() {
            if !(d.low < d.high) || !d.low.is_finite() || !d.high.is_finite() {
                return Err(Error::Config(format!(
                    "grid dimension {i}: need finite low < high, got [{}, {}]",
                    d.low, d.high
                )));
            }
            if d.bins < 2 {
                return Err(Error::Config(format!("grid dimension {i}: need at least 2 bins, got {}", d.bins)));
            }
        }
        Ok(ActionGrid { dims })
    }

    /// `count` identical dimensions.
    pub fn uniform(count: usize, low: f64, high: f64, bins: usize) -> Result<Self> {
        Self::new(alloc::vec![GridDim { low, high, bins }; count])
    }

    pub fn dims(&self) -> &[GridDim] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    /// Bins per dimension when every dimension has the same count.
    pub fn rectangular_bins(&self) -> Option<usize> {
        let first = self.dims[0].bins;
        self.dims.iter().all(|d| d.bins == first).then_some(first)
    }

    /// Continuous control for each index: `low + k·(high − low)/(bins − 1)`.
    pub fn decode(&self, action: &JointAction) -> Result<Vec<f64>> {
        if action.indices.len() != self.dims.len() {
            return Err(Error::dim("joint action", self.dims.len(), action.indices.len()));
        }
        action
            .indices
            .iter()
            .zip(&self.dims)
            .enumerate()
            .map(|(i, (&k, d))| {
                if k >= d.bins {
                    return Err(Error::Validation(format!(
                        "sub-action index {k} in dimension {i} outside [0, {})",
                        d.bins
                    )));
                }
                // The last bin maps to `high` exactly.
                if k == d.bins - 1 {
                    return Ok(d.high);
                }
                Ok(d.low + k as f64 * (d.high - d.low) / (d.bins - 1) as f64)
            })
            .collect()
    }
}

/// Free-function form of [`ActionGrid::decode`].
pub fn action_decode(action: &JointAction, grid: &ActionGrid) -> Result<Vec<f64>> {
    grid.decode(action)
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_angle(theta: f64) -> f64 {
    use core::f64::consts::PI;
    let two_pi = 2.0 * PI;
    let mut x = libm::fmod(theta + PI, two_pi);
    if x < 0.0 {
        x += two_pi;
    }
    // x ∈ [0, 2π); x == 0 corresponds to −π which maps to +π.
    if x == 0.0 {
        PI
    } else {
        x - PI
    }
}
