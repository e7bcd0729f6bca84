//! Decision-tree ensembles with data-derived randomized feature selection.
//!
//! Each tree of an ensemble is grown on k feature columns drawn once,
//! without replacement, from a probability distribution over the features:
//! uniform, proportional to squared column norms, or proportional to
//! statistical leverage scores computed from a truncated SVD of the training
//! matrix. A per-node-randomized forest (no bagging, ceil(sqrt(d)) candidate
//! features per split) serves as the baseline. Prediction is a majority vote
//! over the trees.
//!
//! The [`bench`] module reproduces the standard measurement families on any
//! loaded or synthetic dataset: test error versus cumulative training time,
//! test error versus number of trees, and total node count needed to reach a
//! target error under a time budget.
//!
//! Everything is deterministic for a fixed seed, including under parallel
//! tree training; see [`sampling`] for the generator contract.

pub mod bench;
pub mod data;
pub mod ensemble;
mod error;
pub mod matrix;
pub mod sampling;
pub mod scores;
pub mod tree;

pub use error::{Error, Result};
