//! The two-color coupled chain and the pruning operator.
//!
//! Blue growth inside an `alpha`-tree follows the `alpha'` dynamics. Pruning a
//! finished tree with the same uniforms recovers exactly the same blue subtree.

mod acceptance;
mod colored;
mod prune;

pub use acceptance::{accept_probability, AcceptanceTable};
pub use colored::{
    blue_shape_at, blue_shape_check, blue_step_probability, coupled_step, leaf_count_trace,
    leaf_counts_at, ColoredTree, CoupledChain, CoupledRecord, LeafCountTrace, BLUE_TOLERANCE,
};
pub use prune::{
    coupling_comparison, coupling_equality_check, lipschitz_bound_check, nested_prune, prune,
    CouplingComparison, LipschitzReport, PruneDecision, PruneResult,
};
