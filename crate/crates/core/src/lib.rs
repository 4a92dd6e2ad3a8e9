//! Reinforcement learning with linear function approximation on non-Markov
//! state/cost processes.
//!
//! The processes are finite-memory (window) reductions of finite POMDPs. The
//! crate provides the learners (TD(0), linear Q-learning, quantized tabular
//! Q-learning), exact oracles for the limits they converge to (the
//! stationary regime MDP, projected Bellman fixed points, mixing and filter
//! stability diagnostics), and evaluation of the closed-form error bounds.
//!
//! Module map:
//! - [`model`]: POMDPs, window states, Bayes filtering, simulation, the joint chain.
//! - [`features`]: bases, quantizers, projection and Gram matrices.
//! - [`oracle`]: invariant distributions, stationary regime MDP, Bellman operators.
//! - [`learners`]: the online iterations.
//! - [`analysis`]: error bounds and rollouts.
//! - [`harness`]: config-driven experiments behind the `nmrl` CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod error;
pub mod features;
pub mod harness;
pub mod learners;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod rng;

pub use error::{Error, Result};
