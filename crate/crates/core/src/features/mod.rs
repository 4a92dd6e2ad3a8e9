//! Basis functions, quantizers, the `L2(pi)` projection and Gram matrices.

mod basis;
mod dominance;
mod projection;
mod quantizer;

pub use basis::FeatureBasis;
pub use dominance::{
    dominance_check, gram_exploration, gram_for_map, gram_greedy, greedy_actions, DominanceReport,
    MAX_ENUMERATED_MAPS, SAMPLED_THETAS,
};
pub use projection::{project, GramKind, GramMatrix, Projection, SINGULAR_TOL};
pub use quantizer::Quantizer;
