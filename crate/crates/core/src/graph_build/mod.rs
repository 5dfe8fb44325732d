//! Graph construction from an image cube: PCA features, 4-adjacency plus
//! Euclidean MST edges over the labelled pixels, and embedding-driven
//! edge weights.

mod edges;
mod emst;
mod pca;
mod weights;

pub use edges::{build_edge_set, build_edge_set_from_features, EdgeSet, GraphStats, Provenance};
pub use emst::{euclidean_mst, squared_distance};
pub use pca::{fit_pca, fit_pca_rows, PcaBasis};
pub use weights::{edge_weights, reweight, WEIGHT_FLOOR};

/// Default number of leading principal components used for the EMST.
pub const DEFAULT_EMST_DIMS: usize = 32;
