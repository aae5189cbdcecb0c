//! Exact moments of the laws attached to nested stable trees, the identities
//! relating them, and the samplers used to check them.

mod moments;
mod sampling;

pub use moments::{
    alpha_bar, default_p_grid, gamma_moment, i_moment, identity_suite, j_moment,
    max_relative_error, mean_and_stderr, ml_moment, q_moment, MLParams, MomentReport,
    IDENTITY_TOLERANCE,
};
pub use sampling::{
    crp_table_distribution, crp_tables, expected_leaf_count, expected_two_leaf_distance,
    gamma_sample, ml_sample_via_chain,
};
