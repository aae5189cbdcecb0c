//! Fragmentation views of grown trees: component masses above a height, the
//! projection of leaves onto the blue subtree, size-biased reordering, the
//! dissipative extraction rule, and the blue-leaf growth exponent.

mod extract;
mod profile;

pub use extract::{
    dissipative_extract, extract_with_trace, malthus_diagnostic, size_biased_reorder, Extraction,
    MalthusReport,
};
pub use profile::{
    frag_profile, projected_mass, projection, FragMeasure, FragProfile, Fragment, MassPartition,
    MASS_TOLERANCE,
};
