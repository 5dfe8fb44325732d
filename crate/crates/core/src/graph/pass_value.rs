use std::cmp::Ordering;

use super::{Graph, UnionFind};
use crate::error::{Error, Result};

/// A pass value (minimax path weight). Disconnected pairs carry
/// `f64::MAX` with `disconnected` set; compare with [`PassValue::total_cmp`] rather
/// than doing arithmetic on the value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassValue {
    pub value: f64,
    pub disconnected: bool,
}

impl PassValue {
    pub const ZERO: PassValue = PassValue {
        value: 0.0,
        disconnected: false,
    };
    pub const DISCONNECTED: PassValue = PassValue {
        value: f64::MAX,
        disconnected: true,
    };

    pub fn finite(value: f64) -> Self {
        Self {
            value,
            disconnected: false,
        }
    }

    /// Total order with every disconnected value above every finite one.
    pub fn total_cmp(&self, other: &Self) -> Ordering {
        self.disconnected
            .cmp(&other.disconnected)
            .then(self.value.total_cmp(&other.value))
    }

    pub fn min(self, other: Self) -> Self {
        if other.total_cmp(&self).is_lt() {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Self) -> Self {
        if other.total_cmp(&self).is_gt() {
            other
        } else {
            self
        }
    }
}

/// Kruskal minimum spanning forest; edge indices in the order they were
/// accepted. Ties are broken by edge index.
pub fn minimum_spanning_forest(g: &Graph) -> Vec<usize> {
    let w = g.weights();
    let mut order: Vec<usize> = (0..g.n_edges()).collect();
    order.sort_by(|&a, &b| w[a].total_cmp(&w[b]).then(a.cmp(&b)));
    let mut uf = UnionFind::new(g.n_vertices());
    let mut forest = Vec::with_capacity(g.n_vertices().saturating_sub(1));
    for e in order {
        let (u, v) = g.endpoints()[e];
        if uf.find(u) != uf.find(v) {
            uf.union(u, v);
            forest.push(e);
        }
    }
    forest
}

/// Pass values read off a minimum spanning forest: the pass value of `u, v`
/// is the largest weight on their forest path.
#[derive(Debug, Clone)]
pub struct PassValueIndex {
    offsets: Vec<usize>,
    adj: Vec<(usize, f64)>,
}

impl PassValueIndex {
    pub fn new(g: &Graph) -> Self {
        let forest = minimum_spanning_forest(g);
        let n = g.n_vertices();
        let mut offsets = vec![0usize; n + 1];
        for &e in &forest {
            let (u, v) = g.endpoints()[e];
            offsets[u + 1] += 1;
            offsets[v + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let mut fill = offsets.clone();
        let mut adj = vec![(0, 0.0); 2 * forest.len()];
        for &e in &forest {
            let (u, v) = g.endpoints()[e];
            let w = g.weights()[e];
            adj[fill[u]] = (v, w);
            fill[u] += 1;
            adj[fill[v]] = (u, w);
            fill[v] += 1;
        }
        Self { offsets, adj }
    }

    pub fn n_vertices(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Pass values from `source` to every vertex.
    pub fn from_source(&self, source: usize) -> Vec<PassValue> {
        let mut out = vec![PassValue::DISCONNECTED; self.n_vertices()];
        out[source] = PassValue::ZERO;
        let mut stack = vec![source];
        while let Some(x) = stack.pop() {
            let px = out[x].value;
            for &(y, w) in &self.adj[self.offsets[x]..self.offsets[x + 1]] {
                if out[y].disconnected {
                    out[y] = PassValue::finite(px.max(w));
                    stack.push(y);
                }
            }
        }
        out
    }
}

fn check_vertex(g: &Graph, v: usize) -> Result<()> {
    if v >= g.n_vertices() {
        return Err(Error::VertexOutOfRange {
            vertex: v,
            n_vertices: g.n_vertices(),
        });
    }
    Ok(())
}

/// Minimum over all `u`-`v` paths of the largest edge weight on the path.
pub fn pass_value(g: &Graph, u: usize, v: usize) -> Result<PassValue> {
    check_vertex(g, u)?;
    check_vertex(g, v)?;
    Ok(PassValueIndex::new(g).from_source(u)[v])
}

/// Smallest pass value between any `x` in `xs` and any `y` in `ys`.
pub fn set_dissimilarity(g: &Graph, xs: &[usize], ys: &[usize]) -> Result<PassValue> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::Empty("vertex set"));
    }
    for &v in xs.iter().chain(ys) {
        check_vertex(g, v)?;
    }
    let index = PassValueIndex::new(g);
    Ok(xs
        .iter()
        .map(|&x| {
            let from_x = index.from_source(x);
            ys.iter()
                .map(|&y| from_x[y])
                .fold(PassValue::DISCONNECTED, PassValue::min)
        })
        .fold(PassValue::DISCONNECTED, PassValue::min))
}
