//! The online iterations: TD(0) and Q-learning with linear features, and
//! quantized tabular Q-learning with visit-count step sizes.

mod linear_q;
mod run;
mod schedule;
mod tabular_q;
mod td0;

pub use linear_q::LinearQ;
pub use run::{
    l2_distance, run_linear_q, run_tabular_q, run_td0, sup_distance, ConvergenceTrace,
    RecordSource, RunOptions,
};
pub use schedule::LearningRate;
pub use tabular_q::TabularQ;
pub use td0::{Td0, DIVERGENCE_NORM};
