//! Branching dueling Q-network and the advantage baseline.

mod network;
mod tables;

use num_bigint::BigUint;

pub use network::{init_network, BranchingGrads, BranchingNet, Evaluation, ForwardCache, NetWidths};
pub use tables::{
    baseline, compose_q, greedy_action, AdvantageTable, Baseline, BaselineMode, JointAction, QTable,
    StateValue,
};

pub(crate) use tables::{argmax, max_mean_branch};

/// Size of the joint action space, `sub_actions ^ branches`, exactly.
pub fn joint_action_count(branches: u32, sub_actions: u64) -> BigUint {
    BigUint::from(sub_actions).pow(branches)
}
