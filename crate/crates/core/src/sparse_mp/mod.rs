//! Belief propagation on pairwise graphical models, with an enumeration oracle
//! and a pluggable message-update interface.

mod bp;
mod model;

pub use bp::{
    bp_marginals, bp_step, exact_marginals, mp_step, run_bp, write_beliefs_csv, BeliefPropagation, BpRun,
    MessageSet, MessageUpdate, MAX_ENUMERATION_STATES,
};
pub use model::GraphicalModel;
