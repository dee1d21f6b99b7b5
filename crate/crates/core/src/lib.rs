//! Branching dueling Q-learning with a max-of-branch-mean advantage baseline.
//!
//! The crate is `no_std` (with `alloc`) and contains everything that does not
//! touch the file system: the dense-network substrate ([`nn`]), the branching
//! network and its baseline module ([`qnet`]), experience replay
//! ([`replay`]), the training loop ([`agent`]) and the environments,
//! including an exactly solvable factored MDP ([`env`]).
//!
//! One forward pass evaluates `n × N` sub-action advantages instead of the
//! `N^n` joint actions:
//!
//! ```
//! use abq_core::qnet::{init_network, joint_action_count, NetWidths};
//! use abq_core::nn::Matrix;
//!
//! let net = init_network(5, 3, 4, NetWidths::default(), 7).unwrap();
//! let eval = net.evaluate(&Matrix::zeros(1, 5)).unwrap();
//! assert_eq!(eval.sub_action_evaluations(), 12);
//! assert_eq!(joint_action_count(3, 4).to_string(), "64");
//! ```
#![no_std]

extern crate alloc;

#[cfg(feature = "std")]
extern crate std;

pub mod agent;
pub mod env;
mod error;
pub mod nn;
pub mod qnet;
pub mod replay;

pub use error::{Error, Result};
