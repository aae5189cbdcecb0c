//! Experiment plumbing: configs, the named experiments, run manifests with
//! file digests, small statistics helpers and the acceptance suite.

mod config;
mod experiments;
mod manifest;
mod stats;
mod table;
pub mod verify;

pub use config::{ExperimentConfig, PartialConfig, EXPERIMENTS};
pub use experiments::{
    compute_experiment, run_experiment, two_leaf_distances, with_workers, ExperimentOutput, CRP,
    CRP_REPEAT, FRAG_THRESHOLDS,
};
pub use manifest::{sha256_hex, write_tables, CheckResult, FileDigest, RunManifest};
pub use stats::{
    compare_distributions, estimate_exponent, geometric_grid, DistributionComparison, PowerFit,
};
pub use table::{Cell, Format, Table};
