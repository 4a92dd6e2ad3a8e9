use super::StationaryMdp;
use crate::error::{Error, Result};
use crate::linalg::sup_norm;
use crate::model::FiniteMemoryPolicy;

/// Iteration cap for value iteration.
pub const VI_CAP: usize = 1_000_000;

fn check_policy(mdp: &StationaryMdp, policy: &FiniteMemoryPolicy) -> Result<()> {
    if policy.num_windows() != mdp.num_states() || policy.num_actions() != mdp.num_actions() {
        return Err(Error::validation(
            "policy",
            format!(
                "table is {}x{}, MDP is {}x{}",
                policy.num_windows(),
                policy.num_actions(),
                mdp.num_states(),
                mdp.num_actions()
            ),
        ));
    }
    Ok(())
}

/// `(T^gamma f)(s) = sum_u gamma(u|s) [c(s,u) + beta sum_{s1} eta(s1|s,u) f(s1)]`.
pub fn bellman_policy(
    f: &[f64],
    mdp: &StationaryMdp,
    policy: &FiniteMemoryPolicy,
) -> Result<Vec<f64>> {
    check_policy(mdp, policy)?;
    if f.len() != mdp.num_states() {
        return Err(Error::validation("f", "length differs from state count"));
    }
    Ok((0..mdp.num_states())
        .map(|s| {
            policy
                .probs(s)
                .iter()
                .enumerate()
                .filter(|(_, g)| **g > 0.0)
                .map(|(u, g)| g * (mdp.c(s, u) + mdp.beta * mdp.expect(s, u, f)))
                .sum()
        })
        .collect())
}

/// `g^-(s) = min_u g(s,u)`.
pub fn min_over_actions(g: &[f64], num_actions: usize) -> Vec<f64> {
    g.chunks(num_actions)
        .map(|r| r.iter().copied().fold(f64::INFINITY, f64::min))
        .collect()
}

/// `(T g)(s,u) = c(s,u) + beta sum_{s1} eta(s1|s,u) min_v g(s1,v)`.
pub fn bellman_optimal(g: &[f64], mdp: &StationaryMdp) -> Result<Vec<f64>> {
    let nu = mdp.num_actions();
    if g.len() != mdp.num_states() * nu {
        return Err(Error::validation(
            "g",
            "length differs from state-action count",
        ));
    }
    let v = min_over_actions(g, nu);
    Ok((0..g.len())
        .map(|i| mdp.c(i / nu, i % nu) + mdp.beta * mdp.expect(i / nu, i % nu, &v))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueSolution {
    pub values: Vec<f64>,
    pub iterations: usize,
    /// `||T v - v||_inf` at the last iterate.
    pub residual: f64,
}

impl ValueSolution {
    /// `beta / (1 - beta) * residual`, a bound on the distance to the fixed
    /// point.
    pub fn error_bound(&self, beta: f64) -> f64 {
        beta / (1.0 - beta) * self.residual
    }
}

fn iterate<F: FnMut(&[f64]) -> Vec<f64>>(
    start: Vec<f64>,
    tol: f64,
    mut op: F,
) -> Result<ValueSolution> {
    let mut v = start;
    for it in 1..=VI_CAP {
        let next = op(&v);
        let residual = next
            .iter()
            .zip(&v)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        v = next;
        if residual < tol {
            return Ok(ValueSolution {
                values: v,
                iterations: it,
                residual,
            });
        }
    }
    Err(Error::NotConverged {
        iterations: VI_CAP,
        change: f64::NAN,
    })
}

/// `J^gamma` of the stationary MDP by value iteration from zero until
/// `||T v - v||_inf < tol`.
pub fn policy_value(
    mdp: &StationaryMdp,
    policy: &FiniteMemoryPolicy,
    tol: f64,
) -> Result<ValueSolution> {
    check_policy(mdp, policy)?;
    iterate(vec![0.0; mdp.num_states()], tol, |v| {
        bellman_policy(v, mdp, policy).expect("shapes checked")
    })
}

/// `Q*` by value iteration from zero until `||T Q - Q||_inf < tol`.
pub fn optimal_q(mdp: &StationaryMdp, tol: f64) -> Result<ValueSolution> {
    iterate(vec![0.0; mdp.num_states() * mdp.num_actions()], tol, |q| {
        bellman_optimal(q, mdp).expect("shape fixed")
    })
}

/// Sup norm over the pairs of positive stationary weight.
pub fn sup_on_support(values: &[f64], weights: &[f64]) -> f64 {
    let masked: Vec<f64> = values
        .iter()
        .zip(weights)
        .map(|(v, w)| if *w > 0.0 { *v } else { 0.0 })
        .collect();
    sup_norm(&masked)
}
