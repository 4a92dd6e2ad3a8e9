//! Exact computations on enumerable models: the invariant law of the joint
//! chain, the stationary regime MDP, Bellman operators and fixed points,
//! mixing and filter-stability diagnostics, and exact policy evaluation on
//! the true POMDP.

mod bellman;
mod evaluation;
mod filter_stability;
mod fixed_point;
mod invariant;
mod mixing;
mod stationary;

pub use bellman::{
    bellman_optimal, bellman_policy, min_over_actions, optimal_q, policy_value, sup_on_support,
    ValueSolution, VI_CAP,
};
pub use evaluation::{evaluate_policy_exact, InitialWindows};
pub use filter_stability::{
    default_horizon, filter_stability, quantizer_resolution, FilterStabilityOptions,
    FilterStabilityReport, ReferencePosterior, TAIL_TARGET,
};
pub use fixed_point::{
    contraction_estimate, contraction_ratio, policy_pair_weights, projected_bellman,
    projected_q_iteration, solve_projected_fixed_point, ContractionReport, FixedPointSolution,
    ProjectedQIteration, SYSTEM_TOL,
};
pub use invariant::{
    invariant_distribution, second_eigenvalue_modulus, InvariantDistribution, POWER_CAP, POWER_TOL,
};
pub use mixing::{
    conditional_covariances, gordin_diagnostic, mixing_profile, GordinReport, MixingProfile,
    SUMMABILITY_TOL,
};
pub use stationary::{
    build_stationary_mdp, hidden_marginal, stationary_posterior, Coverage, StationaryMdp,
};
