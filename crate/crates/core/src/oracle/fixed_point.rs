use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::bellman::bellman_policy;
use super::StationaryMdp;
use crate::error::{Error, Result};
use crate::features::{FeatureBasis, Projection};
use crate::linalg::{min_sym_eigenvalue, weighted_l2};
use crate::model::FiniteMemoryPolicy;
use crate::rng::{stream, Purpose};

/// Singular values of `A` below this make the system singular.
pub const SYSTEM_TOL: f64 = 1e-12;

/// `A theta* = b` with `A = E[Phi(S)(Phi(S) - beta Phi(S1))^T]` and
/// `b = E[Phi(S) C]` under the stationary law.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointSolution {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub theta: Vec<f64>,
    /// Minimum eigenvalue of `(A + A^T) / 2`.
    pub sigma_min_sym: f64,
    /// `||A theta - b||_2`.
    pub residual: f64,
    /// `||Pi T^gamma (theta^T Phi) - theta^T Phi||_{2,pi}`.
    pub bellman_residual: f64,
}

impl FixedPointSolution {
    /// The stationary mean of the TD(0) update direction at `theta`:
    /// `b - A theta`.
    pub fn expected_update(&self, theta: &[f64]) -> Vec<f64> {
        (&self.b - &self.a * DVector::from_column_slice(theta))
            .iter()
            .copied()
            .collect()
    }
}

/// Stationary `pi(s, u) = pi(s) gamma(u | s)`.
pub fn policy_pair_weights(mdp: &StationaryMdp, policy: &FiniteMemoryPolicy) -> Vec<f64> {
    let nu = mdp.num_actions();
    (0..mdp.num_states() * nu)
        .map(|i| mdp.pi_state[i / nu] * policy.prob(i / nu, i % nu))
        .collect()
}

/// `Pi T^gamma f`.
pub fn projected_bellman(
    proj: &Projection,
    mdp: &StationaryMdp,
    policy: &FiniteMemoryPolicy,
    f: &[f64],
) -> Result<Vec<f64>> {
    Ok(proj.apply(&bellman_policy(f, mdp, policy)?))
}

pub fn solve_projected_fixed_point(
    mdp: &StationaryMdp,
    basis: &FeatureBasis,
    policy: &FiniteMemoryPolicy,
) -> Result<FixedPointSolution> {
    if basis.num_points() != mdp.num_states() {
        return Err(Error::validation(
            "basis",
            "point count differs from MDP state count",
        ));
    }
    let proj = Projection::new(basis, &mdp.pi_state)?;
    let d = basis.dim();
    let nu = mdp.num_actions();
    let w = policy_pair_weights(mdp, policy);
    let mut a = DMatrix::zeros(d, d);
    let mut b = DVector::zeros(d);
    let mut next_phi = vec![0.0; d];
    for (i, &wi) in w.iter().enumerate() {
        if wi == 0.0 {
            continue;
        }
        let (s, u) = (i / nu, i % nu);
        let phi = basis.phi(s);
        next_phi.iter_mut().for_each(|v| *v = 0.0);
        for &(j, p) in mdp.eta(s, u) {
            for (n, q) in next_phi.iter_mut().zip(basis.phi(j)) {
                *n += p * q;
            }
        }
        for r in 0..d {
            if phi[r] == 0.0 {
                continue;
            }
            b[r] += wi * phi[r] * mdp.c(s, u);
            for k in 0..d {
                a[(r, k)] += wi * phi[r] * (phi[k] - mdp.beta * next_phi[k]);
            }
        }
    }
    let sym = (&a + a.transpose()) * 0.5;
    let sigma_min_sym = min_sym_eigenvalue(&sym);
    let smallest_sv = a
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if !(smallest_sv > SYSTEM_TOL) {
        return Err(Error::SingularSystem {
            sigma_min: smallest_sv,
        });
    }
    let theta_v = a.clone().lu().solve(&b).ok_or(Error::SingularSystem {
        sigma_min: smallest_sv,
    })?;
    let theta: Vec<f64> = theta_v.iter().copied().collect();
    let residual = (&a * &theta_v - &b).norm();
    let f = basis.values(&theta);
    let pf = projected_bellman(&proj, mdp, policy, &f)?;
    let diff: Vec<f64> = pf.iter().zip(&f).map(|(x, y)| x - y).collect();
    let bellman_residual = weighted_l2(&diff, &mdp.pi_state);
    Ok(FixedPointSolution {
        a,
        b,
        theta,
        sigma_min_sym,
        residual,
        bellman_residual,
    })
}

/// Outcome of iterating `theta <- Pi_{pi(s,u)} T (theta^T Phi)` for
/// Q-functions from zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedQIteration {
    pub theta: Vec<f64>,
    pub iterations: usize,
    /// `||theta_k - theta_{k-1}||_2` at the last iteration.
    pub change: f64,
    pub converged: bool,
}

/// Iterates the projected optimal Bellman map on a state-action basis with
/// the exploration weights `pi(s, u)` until the coefficient change drops
/// below `tol`, the norm exceeds `1e8`, or `max_iterations` passes.
pub fn projected_q_iteration(
    mdp: &StationaryMdp,
    basis: &FeatureBasis,
    tol: f64,
    max_iterations: usize,
) -> Result<ProjectedQIteration> {
    let nu = mdp.num_actions();
    if basis.num_points() != mdp.num_states() * nu {
        return Err(Error::validation(
            "basis",
            "point count differs from the state-action count",
        ));
    }
    let proj = Projection::new(basis, &mdp.pi_sa)?;
    let mut theta = vec![0.0; basis.dim()];
    let mut change = f64::INFINITY;
    for it in 1..=max_iterations {
        let q = basis.values(&theta);
        let g = super::min_over_actions(&q, nu);
        let tq: Vec<f64> = (0..q.len())
            .map(|i| mdp.c(i / nu, i % nu) + mdp.beta * mdp.expect(i / nu, i % nu, &g))
            .collect();
        let next = proj.coefficients(&tq);
        change = next
            .iter()
            .zip(&theta)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        theta = next;
        let norm = theta.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !norm.is_finite() || norm > crate::learners::DIVERGENCE_NORM {
            return Ok(ProjectedQIteration {
                theta,
                iterations: it,
                change,
                converged: false,
            });
        }
        if change < tol {
            return Ok(ProjectedQIteration {
                theta,
                iterations: it,
                change,
                converged: true,
            });
        }
    }
    Ok(ProjectedQIteration {
        theta,
        iterations: max_iterations,
        change,
        converged: false,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionReport {
    pub max_ratio: f64,
    pub pairs_evaluated: usize,
    pub pairs_skipped: usize,
    pub beta: f64,
}

/// `||Pi T f - Pi T g|| / ||f - g||` in `L2(pi)`, maximized over a pair.
pub fn contraction_ratio(
    proj: &Projection,
    mdp: &StationaryMdp,
    policy: &FiniteMemoryPolicy,
    f: &[f64],
    g: &[f64],
) -> Result<Option<f64>> {
    let diff: Vec<f64> = f.iter().zip(g).map(|(a, b)| a - b).collect();
    let den = weighted_l2(&diff, &mdp.pi_state);
    if den == 0.0 {
        return Ok(None);
    }
    let pf = projected_bellman(proj, mdp, policy, f)?;
    let pg = projected_bellman(proj, mdp, policy, g)?;
    let num: Vec<f64> = pf.iter().zip(&pg).map(|(a, b)| a - b).collect();
    Ok(Some(weighted_l2(&num, &mdp.pi_state) / den))
}

/// Largest contraction ratio over `n_pairs` random pairs with entries
/// uniform on `[-1, 1]`.
pub fn contraction_estimate(
    mdp: &StationaryMdp,
    basis: &FeatureBasis,
    policy: &FiniteMemoryPolicy,
    n_pairs: usize,
    seed: u64,
) -> Result<ContractionReport> {
    if n_pairs == 0 {
        return Err(Error::validation("n_pairs", "must be at least 1"));
    }
    let proj = Projection::new(basis, &mdp.pi_state)?;
    let mut rng = stream(seed, Purpose::RandomFunctions, 0);
    let n = mdp.num_states();
    let mut report = ContractionReport {
        max_ratio: 0.0,
        pairs_evaluated: 0,
        pairs_skipped: 0,
        beta: mdp.beta,
    };
    for _ in 0..n_pairs {
        let f: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let g: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        match contraction_ratio(&proj, mdp, policy, &f, &g)? {
            Some(r) => {
                report.pairs_evaluated += 1;
                report.max_ratio = report.max_ratio.max(r);
            }
            None => report.pairs_skipped += 1,
        }
    }
    Ok(report)
}
