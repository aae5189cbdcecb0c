//! Marchal's growth chain for a stable index `alpha` in (1, 2].

mod marchal;
mod weights;

pub(crate) use marchal::binomial_z;
pub use marchal::{
    check_alpha, distribution_check, grow, log_degree_factor, marchal_step, total_weight,
    tree_probability, AttachKind, AttachmentRecord, DistributionReport, Item, MarchalChain,
    SelectionIndex, ShapeFrequency, DRIFT_CHECK_PERIOD, WEIGHT_TOLERANCE,
};
pub use weights::WeightIndex;
