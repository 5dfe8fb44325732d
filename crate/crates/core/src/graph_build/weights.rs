use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::nn::Tensor;

/// Lower bound on edge weights; keeps them strictly positive.
pub const WEIGHT_FLOOR: f64 = 1e-12;

/// Euclidean distance between endpoint embeddings, restricted to `dims`
/// when given (summed in the order listed), floored at [`WEIGHT_FLOOR`].
pub fn edge_weights(
    endpoints: &[(usize, usize)],
    embeddings: &Tensor,
    dims: Option<&[usize]>,
) -> Result<Vec<f64>> {
    if !embeddings.is_finite() {
        return Err(Error::NonFinite("embeddings".into()));
    }
    Ok(endpoints
        .iter()
        .map(|&(u, v)| {
            let (a, b) = (embeddings.row(u), embeddings.row(v));
            let s = match dims {
                None => crate::graph_build::squared_distance(a, b),
                Some(ds) => {
                    let mut s = 0.0;
                    for &d in ds {
                        let x = a[d] - b[d];
                        s += x * x;
                    }
                    s
                }
            };
            s.sqrt().max(WEIGHT_FLOOR)
        })
        .collect())
}

/// Sets every edge weight to the embedding distance of its endpoints.
pub fn reweight(g: &mut Graph, embeddings: &Tensor) -> Result<()> {
    if embeddings.rows() != g.n_vertices() {
        return Err(Error::Config(format!(
            "{} embedding rows for {} vertices",
            embeddings.rows(),
            g.n_vertices()
        )));
    }
    let w = edge_weights(g.endpoints(), embeddings, None)?;
    g.set_weights(w)
}
