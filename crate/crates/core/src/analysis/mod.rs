//! Closed-form error bounds checked against exactly computed quantities, a
//! certified lower bound on the optimal POMDP value, and Monte-Carlo
//! rollouts.

mod belief_grid;
mod bounds;
mod rollout;

pub use belief_grid::{grid_size, BeliefGrid, GridOptions};
pub use bounds::{
    channel_lipschitz, l2_bound, near_linearity, pomdp_q_bound, pomdp_value_bound, uniform_bound,
    uniform_bound_rhs, ErrorBoundReport, NearLinearity, ObservationQuantizer, PomdpSetting,
};
pub use rollout::{rollout_horizon, rollout_value, RolloutEstimate};
