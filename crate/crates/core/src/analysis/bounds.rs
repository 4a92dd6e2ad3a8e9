use std::collections::BTreeMap;

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use serde::Serialize;

use super::belief_grid::{BeliefGrid, GridOptions};
use crate::error::{Error, Result};
use crate::features::{FeatureBasis, GramKind, GramMatrix, Projection};
use crate::linalg::weighted_l2;
use crate::model::{FiniteMemoryPolicy, PomdpSpec, WindowSpace};
use crate::oracle::{
    evaluate_policy_exact, quantizer_resolution, FilterStabilityReport, InitialWindows,
    StationaryMdp,
};

/// Tolerance for the exact value iterations feeding a bound check.
const EVAL_TOL: f64 = 1e-12;

/// A measured error next to its closed-form bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorBoundReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`.
    pub slack: f64,
    pub inputs: BTreeMap<String, f64>,
}

impl ErrorBoundReport {
    fn new(name: &str, lhs: f64, rhs: f64, inputs: &[(&str, f64)]) -> Self {
        Self {
            name: name.to_string(),
            lhs,
            rhs,
            slack: rhs - lhs,
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.slack >= -tol
    }
}

fn check_shapes(j: &[f64], theta: &[f64], basis: &FeatureBasis, mdp: &StationaryMdp) -> Result<()> {
    if j.len() != mdp.num_states() || basis.num_points() != mdp.num_states() {
        return Err(Error::validation(
            "values",
            "length differs from the state count",
        ));
    }
    if theta.len() != basis.dim() {
        return Err(Error::validation(
            "theta",
            "length differs from the basis dimension",
        ));
    }
    Ok(())
}

/// `||J - theta^T Phi||_{2,pi} <= ||J - Pi J||_{2,pi} / (1 - beta)`.
pub fn l2_bound(
    j: &[f64],
    theta_star: &[f64],
    basis: &FeatureBasis,
    mdp: &StationaryMdp,
) -> Result<ErrorBoundReport> {
    check_shapes(j, theta_star, basis, mdp)?;
    let pi = &mdp.pi_state;
    let fitted = basis.values(theta_star);
    let err: Vec<f64> = j.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let proj = Projection::new(basis, pi)?.apply(j);
    let residual: Vec<f64> = j.iter().zip(&proj).map(|(a, b)| a - b).collect();
    let proj_err = weighted_l2(&residual, pi);
    let beta = mdp.beta;
    Ok(ErrorBoundReport::new(
        "l2",
        weighted_l2(&err, pi),
        proj_err / (1.0 - beta),
        &[
            ("beta", beta),
            ("d", basis.dim() as f64),
            ("projection_error", proj_err),
        ],
    ))
}

/// `lambda (1 + ((2 - beta) / (1 - beta)) sqrt(d / sigma_min))`.
pub fn uniform_bound_rhs(lambda: f64, beta: f64, d: usize, sigma_min: f64) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    lambda * (1.0 + (2.0 - beta) / (1.0 - beta) * (d as f64 / sigma_min).sqrt())
}

/// The minimax near-linearity constant over the states with positive weight.
#[derive(Debug, Clone, PartialEq)]
pub struct NearLinearity {
    /// `max_s |J(s) - theta^T Phi(s)|` at `theta`, recomputed from the
    /// returned coefficients.
    pub lambda: f64,
    pub theta: Vec<f64>,
    /// Optimal value reported by the linear program.
    pub lp_objective: f64,
}

/// Solves `min_theta max_{s: w(s) > 0} |J(s) - theta^T Phi(s)|` as a linear
/// program.
pub fn near_linearity(j: &[f64], basis: &FeatureBasis, weights: &[f64]) -> Result<NearLinearity> {
    if j.len() != basis.num_points() || weights.len() != j.len() {
        return Err(Error::validation(
            "values",
            "length differs from the basis points",
        ));
    }
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let t = lp.add_var(1.0, (0.0, f64::INFINITY));
    let theta: Vec<_> = (0..basis.dim())
        .map(|_| lp.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY)))
        .collect();
    for s in (0..j.len()).filter(|&s| weights[s] > 0.0) {
        let phi = basis.phi(s);
        let mut up: Vec<_> = theta.iter().zip(phi).map(|(&v, &p)| (v, p)).collect();
        up.push((t, 1.0));
        lp.add_constraint(&up[..], ComparisonOp::Ge, j[s]);
        let mut down: Vec<_> = theta.iter().zip(phi).map(|(&v, &p)| (v, -p)).collect();
        down.push((t, 1.0));
        lp.add_constraint(&down[..], ComparisonOp::Ge, -j[s]);
    }
    let sol = lp
        .solve()
        .map_err(|e| Error::LinearProgram(e.to_string()))?;
    let coef: Vec<f64> = theta.iter().map(|&v| *sol.var_value(v)).collect();
    let fitted = basis.values(&coef);
    let lambda = (0..j.len())
        .filter(|&s| weights[s] > 0.0)
        .fold(0.0f64, |m, s| m.max((j[s] - fitted[s]).abs()));
    Ok(NearLinearity {
        lambda,
        theta: coef,
        lp_objective: sol.objective(),
    })
}

/// `max_{pi(s) > 0} |J(s) - theta*^T Phi(s)|` against the uniform bound.
pub fn uniform_bound(
    j: &[f64],
    theta_star: &[f64],
    basis: &FeatureBasis,
    mdp: &StationaryMdp,
    lambda_hat: f64,
) -> Result<ErrorBoundReport> {
    check_shapes(j, theta_star, basis, mdp)?;
    let pi = &mdp.pi_state;
    let sigma_min = GramMatrix::weighted(basis, pi, GramKind::State).sigma_min;
    if sigma_min <= 0.0 {
        return Err(Error::RankDeficient {
            sigma_min,
            tolerance: 0.0,
        });
    }
    let fitted = basis.values(theta_star);
    let lhs = (0..j.len())
        .filter(|&s| pi[s] > 0.0)
        .fold(0.0f64, |m, s| m.max((j[s] - fitted[s]).abs()));
    let d = basis.dim();
    Ok(ErrorBoundReport::new(
        "uniform",
        lhs,
        uniform_bound_rhs(lambda_hat, mdp.beta, d, sigma_min),
        &[
            ("lambda", lambda_hat),
            ("beta", mdp.beta),
            ("d", d as f64),
            ("sigma_min", sigma_min),
        ],
    ))
}

/// The finite-memory policy-evaluation setting shared by the POMDP bounds.
#[derive(Debug, Clone, Copy)]
pub struct PomdpSetting<'a> {
    pub spec: &'a PomdpSpec,
    pub memory: usize,
    pub beta: f64,
    /// Action distribution for the first `N` steps.
    pub burn_in: &'a [f64],
}

/// `E |J(z_0, gamma) - theta*^T Phi(h_0)|` over the initial windows against
/// `(||c|| / (1 - beta)) sum beta^t L_t + lambda (1 + ((2 - beta) / (1 - beta)) sqrt(d / sigma_min))`.
///
/// `mdp` is the stationary regime MDP of `policy`, `basis` lives on the
/// window space and `fs` holds `L_t` for the same memory and policy.
pub fn pomdp_value_bound(
    setting: PomdpSetting<'_>,
    policy: &FiniteMemoryPolicy,
    mdp: &StationaryMdp,
    basis: &FeatureBasis,
    theta_star: &[f64],
    fs: &FilterStabilityReport,
    lambda_hat: f64,
) -> Result<ErrorBoundReport> {
    let PomdpSetting {
        spec,
        memory,
        beta,
        burn_in,
    } = setting;
    let windows = WindowSpace::for_spec(spec, memory)?;
    if basis.num_points() != windows.len() || mdp.num_states() != windows.len() {
        return Err(Error::validation(
            "basis",
            "points differ from the window space",
        ));
    }
    if theta_star.len() != basis.dim() {
        return Err(Error::validation(
            "theta",
            "length differs from the basis dimension",
        ));
    }
    let values = evaluate_policy_exact(spec, policy, memory, beta, EVAL_TOL)?;
    let init = InitialWindows::new(spec, memory, burn_in)?;
    let j0 = init.values(&values.values);
    let fitted = basis.values(theta_star);
    let mut lhs = 0.0;
    let mut uncovered = 0.0;
    for (h, &m) in init.mass.iter().enumerate() {
        if m > 0.0 {
            lhs += m * (j0[h] - fitted[h]).abs();
            if mdp.pi_state[h] == 0.0 {
                uncovered += m;
            }
        }
    }
    let sigma_min = GramMatrix::weighted(basis, &mdp.pi_state, GramKind::State).sigma_min;
    let c = spec.cost_sup();
    let filter_term = c / (1.0 - beta) * fs.certified_sum();
    let approx_term = uniform_bound_rhs(lambda_hat, beta, basis.dim(), sigma_min);
    Ok(ErrorBoundReport::new(
        "pomdp_value",
        lhs,
        filter_term + approx_term,
        &[
            ("lambda", lambda_hat),
            ("beta", beta),
            ("d", basis.dim() as f64),
            ("sigma_min", sigma_min),
            ("cost_sup", c),
            ("discounted_l_sum", fs.certified_sum()),
            ("l_tail_bound", fs.tail_bound),
            ("value_error_bound", values.error_bound(beta)),
            ("uncovered_initial_mass", uncovered),
        ],
    ))
}

/// Channel smoothness surrogate
/// `max_x max_{y != y'} |O(y|x) - O(y'|x)| / dist(y, y')` under the metric
/// given by `points` (default: the indices).
pub fn channel_lipschitz(spec: &PomdpSpec, points: Option<&[f64]>) -> Result<f64> {
    let ny = spec.num_obs();
    if points.is_some_and(|p| p.len() != ny) {
        return Err(Error::validation(
            "obs_points",
            "length differs from the observation count",
        ));
    }
    let pt = |y: usize| points.map_or(y as f64, |p| p[y]);
    let mut a = 0.0f64;
    for x in 0..spec.num_states() {
        for y in 0..ny {
            for y2 in y + 1..ny {
                let dist = (pt(y) - pt(y2)).abs();
                if dist == 0.0 {
                    return Err(Error::validation(
                        "obs_points",
                        "observation points must be distinct",
                    ));
                }
                a = a.max((spec.o(x, y) - spec.o(x, y2)).abs() / dist);
            }
        }
    }
    Ok(a)
}

/// Quantized observation channel for the learner.
#[derive(Debug, Clone, Copy)]
pub struct ObservationQuantizer<'a> {
    pub obs_bins: &'a [usize],
    pub points: Option<&'a [f64]>,
}

/// `E [J(z_0, gamma^N) - J*(z_0)]` over the initial windows against
/// `(2 ||c|| / (1 - beta)) sum beta^t L^_t + (beta / (1 - beta)^2) ||c|| alpha_Y L_Y`.
///
/// `policy` is the learned greedy policy lifted to the full window space and
/// `fs_hat` holds `L^_t` of the quantized model. `J*` is replaced by the certified
/// belief-grid lower bound, so the reported lhs can only overstate the error.
pub fn pomdp_q_bound(
    setting: PomdpSetting<'_>,
    quantizer: ObservationQuantizer<'_>,
    policy: &FiniteMemoryPolicy,
    fs_hat: &FilterStabilityReport,
    grid: &GridOptions,
) -> Result<ErrorBoundReport> {
    let PomdpSetting {
        spec,
        memory,
        beta,
        burn_in,
    } = setting;
    let values = evaluate_policy_exact(spec, policy, memory, beta, EVAL_TOL)?;
    let init = InitialWindows::new(spec, memory, burn_in)?;
    let j0 = init.values(&values.values);
    let grid_solution = BeliefGrid::solve(spec, beta, grid)?;
    let mut lhs = 0.0;
    for (h, &m) in init.mass.iter().enumerate() {
        if m > 0.0 {
            lhs += m * (j0[h] - grid_solution.interpolate(init.posterior(h))).abs();
        }
    }
    let c = spec.cost_sup();
    let l_y = quantizer_resolution(quantizer.obs_bins, quantizer.points);
    let alpha_y = channel_lipschitz(spec, quantizer.points)?;
    let filter_term = 2.0 * c / (1.0 - beta) * fs_hat.certified_sum();
    let quant_term = if l_y == 0.0 {
        0.0
    } else {
        beta / (1.0 - beta).powi(2) * c * alpha_y * l_y
    };
    Ok(ErrorBoundReport::new(
        "pomdp_q",
        lhs,
        filter_term + quant_term,
        &[
            ("beta", beta),
            ("cost_sup", c),
            ("discounted_l_sum", fs_hat.certified_sum()),
            ("l_tail_bound", fs_hat.tail_bound),
            ("l_y", l_y),
            ("alpha_y", alpha_y),
            ("grid_resolution", grid_solution.resolution()),
            ("grid_points", grid_solution.len() as f64),
            ("grid_residual", grid_solution.residual),
            ("value_error_bound", values.error_bound(beta)),
        ],
    ))
}
