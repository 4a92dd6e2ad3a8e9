//! Finite POMDPs and their finite-memory reduction.
//!
//! A [`PomdpSpec`] plus a memory length `N` defines the window process
//! `h_t = (y_t, ..., y_{t-N}, u_{t-1}, ..., u_{t-N})`. Windows are encoded as
//! integers by [`WindowSpace`]; [`Simulator`] produces the record stream the
//! learners consume and [`build_joint_chain`] the exact transition matrix of
//! `(h_t, x_t, u_t)`.

mod chain;
pub mod chain2;
mod filter;
mod policy;
pub mod random;
mod simulate;
mod spec;
mod window;

pub use chain::{build_joint_chain, initial_window_distribution, JointSpace};
pub use filter::{correct_into, filter_update, predict_into, Predictor};
pub use policy::FiniteMemoryPolicy;
pub use simulate::{Simulator, TransitionRecord};
pub(crate) use spec::dense_bin_count;
pub use spec::{ModelFile, PomdpSpec, ROW_TOL};
pub use window::{WindowSpace, WindowState, MAX_WINDOWS};
