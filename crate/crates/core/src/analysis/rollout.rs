use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{FiniteMemoryPolicy, PomdpSpec, Simulator};
use crate::rng::{stream, Purpose};

/// Monte-Carlo estimate of the discounted cost from the burn-in start.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RolloutEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_rollouts: usize,
    pub horizon: usize,
    /// `beta^horizon ||c|| / (1 - beta)`, bounding the truncated tail.
    pub truncation_bound: f64,
}

/// Smallest `H >= 1` with `beta^H ||c|| / (1 - beta) < tail_tol`.
pub fn rollout_horizon(cost_sup: f64, beta: f64, tail_tol: f64) -> usize {
    let mut h = 1;
    while beta.powi(h as i32) * cost_sup / (1.0 - beta) >= tail_tol {
        h += 1;
    }
    h
}

/// Averages `sum_{t < H} beta^t C_t` over independent rollouts, rollout `r`
/// drawing from rollout stream `r` of `seed`.
#[allow(clippy::too_many_arguments)]
pub fn rollout_value(
    spec: &PomdpSpec,
    policy: &FiniteMemoryPolicy,
    memory: usize,
    burn_in: &[f64],
    beta: f64,
    n_rollouts: usize,
    tail_tol: f64,
    seed: u64,
) -> Result<RolloutEstimate> {
    if n_rollouts < 2 {
        return Err(Error::validation("n_rollouts", "need at least 2 rollouts"));
    }
    if !(tail_tol > 0.0) {
        return Err(Error::validation("tail_tol", "must be positive"));
    }
    let horizon = rollout_horizon(spec.cost_sup(), beta, tail_tol);
    let returns = (0..n_rollouts)
        .into_par_iter()
        .map(|r| {
            let rng = stream(seed, Purpose::Rollout, r as u64);
            let sim = Simulator::with_rng(spec, policy, memory, burn_in, horizon as u64, rng)?;
            let mut total = 0.0;
            let mut discount = 1.0;
            for rec in sim {
                total += discount * rec.cost;
                discount *= beta;
            }
            Ok(total)
        })
        .collect::<Result<Vec<f64>>>()?;
    let n = n_rollouts as f64;
    let mean = returns.iter().sum::<f64>() / n;
    let var = returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(RolloutEstimate {
        mean,
        std_error: (var / n).sqrt(),
        n_rollouts,
        horizon,
        truncation_bound: beta.powi(horizon as i32) * spec.cost_sup() / (1.0 - beta),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_state(c: f64) -> PomdpSpec {
        PomdpSpec::new(
            vec![vec![vec![1.0]]],
            vec![vec![1.0]],
            vec![vec![c]],
            vec![1.0],
        )
        .unwrap()
    }

    #[test]
    fn zero_cost_is_zero() {
        let spec = one_state(0.0);
        let est = rollout_value(
            &spec,
            &FiniteMemoryPolicy::uniform(1, 1),
            0,
            &[1.0],
            0.8,
            10,
            1e-6,
            1,
        )
        .unwrap();
        assert_eq!(est.mean, 0.0);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn unit_cost_is_geometric() {
        let spec = one_state(1.0);
        let est = rollout_value(
            &spec,
            &FiniteMemoryPolicy::uniform(1, 1),
            0,
            &[1.0],
            0.8,
            10,
            1e-6,
            1,
        )
        .unwrap();
        assert!(est.truncation_bound < 1e-6);
        assert!((est.mean - 5.0).abs() <= est.truncation_bound);
    }
}
