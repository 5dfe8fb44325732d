//! Seeded watershed classification on edge-weighted graphs, with a small
//! embedding network trained by triplet loss on watershed-propagated labels.
//!
//! The crate is organised bottom-up:
//!
//! - [`nn`]: dense tensors and a layer stack with explicit backward passes.
//! - [`graph`]: edge-weighted graphs, union-find, watershed labelling, pass
//!   values and the brute-force max-margin oracle.
//! - [`graph_build`]: PCA, 4-adjacency and Euclidean MST edges, reweighting.
//! - [`classifier`]: single and ensemble watershed classifiers, triplet mining.
//! - [`trainer`]: triplet loss, cyclic learning rate and the training loop.
//! - [`data`]: datasets on disk, synthetic cubes, patches, splits and metrics.
//! - [`pipeline`]: prepare, split, train, predict and score in one place.

pub mod classifier;
pub mod data;
pub mod error;
pub mod graph;
pub mod graph_build;
pub mod nn;
pub mod pipeline;
pub mod rng;
pub mod trainer;

pub use error::{Error, Result};
