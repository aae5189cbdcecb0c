//! Simulation and verification toolkit for nested stable random trees.
//!
//! The crate grows Marchal's random trees, runs the two-color coupled chain
//! that embeds an `alpha'`-tree inside an `alpha`-tree, prunes finished trees,
//! computes the exact moments of the laws involved, and extracts
//! fragmentation statistics. The [`harness`] module turns all of this into
//! reproducible experiments.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod coupled;
pub mod distributions;
pub mod error;
pub mod fragmentation;
pub mod harness;
pub mod rng;
pub mod tree;

pub use error::{Error, Result};
