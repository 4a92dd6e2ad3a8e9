//! The two-state reference model used throughout the tests and shipped
//! configs.

use super::spec::PomdpSpec;

pub const MEMORY: usize = 1;
pub const BETA: f64 = 0.8;

/// Two hidden states, two noisy observations, two actions.
///
/// Action 0 moves the state to 0 with probability 0.9, action 1 with
/// probability 0.2, regardless of the current state. Observations report the
/// state correctly with probability 0.8. Cost is 1 when the action differs
/// from the hidden state.
pub fn spec() -> PomdpSpec {
    let t0 = vec![0.9, 0.1];
    let t1 = vec![0.2, 0.8];
    PomdpSpec::new(
        vec![vec![t0.clone(), t1.clone()], vec![t0, t1]],
        vec![vec![0.8, 0.2], vec![0.2, 0.8]],
        vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        vec![0.5, 0.5],
    )
    .expect("reference model is valid")
}
