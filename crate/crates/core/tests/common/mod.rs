//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use triplet_watershed::graph::{ClassId, Edge, Graph};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random connected graph: a random spanning tree plus extra edges.
pub fn random_connected_graph(rng: &mut impl Rng, n: usize, extra: f64) -> Graph {
    let mut edges: Vec<Edge> = Vec::new();
    let mut has = std::collections::HashSet::new();
    let mut add = |edges: &mut Vec<Edge>, u: usize, v: usize, w: f64| {
        let key = (u.min(v), u.max(v));
        if u != v && has.insert(key) {
            edges.push(Edge::new(u, v, w));
        }
    };
    for v in 1..n {
        let u = rng.random_range(0..v);
        let w = rng.random_range(0.01..10.0);
        add(&mut edges, u, v, w);
    }
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(extra) {
                let w = rng.random_range(0.01..10.0);
                add(&mut edges, u, v, w);
            }
        }
    }
    Graph::new(n, &edges).unwrap()
}

/// Minimum over all simple paths of the largest edge weight, by exhaustive
/// depth-first enumeration. `None` when no path exists.
pub fn brute_pass_value(g: &Graph, u: usize, v: usize) -> Option<f64> {
    if u == v {
        return Some(0.0);
    }
    fn dfs(g: &Graph, at: usize, goal: usize, seen: &mut Vec<bool>, worst: f64, best: &mut Option<f64>) {
        if at == goal {
            *best = Some(best.map_or(worst, |b: f64| b.min(worst)));
            return;
        }
        for &(next, e) in g.neighbors(at) {
            if !seen[next] {
                seen[next] = true;
                dfs(g, next, goal, seen, worst.max(g.weights()[e]), best);
                seen[next] = false;
            }
        }
    }
    let mut seen = vec![false; g.n_vertices()];
    seen[u] = true;
    let mut best = None;
    dfs(g, u, v, &mut seen, 0.0, &mut best);
    best
}

/// Kruskal on the complete graph over `points`; returns the sorted edge
/// lengths of the tree.
pub fn kruskal_emst_lengths(points: &[Vec<f64>]) -> Vec<f64> {
    let n = points.len();
    let dist = |a: &[f64], b: &[f64]| {
        let mut s = 0.0;
        for (x, y) in a.iter().zip(b) {
            s += (x - y) * (x - y);
        }
        s
    };
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            pairs.push((dist(&points[i], &points[j]), i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            x = p[x];
        }
        x
    }
    let mut out = Vec::new();
    for (d, i, j) in pairs {
        let (a, b) = (root(&mut parent, i), root(&mut parent, j));
        if a != b {
            parent[a] = b;
            out.push(d.sqrt());
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Average precision by walking the precision-recall curve: area as the sum
/// of precision times recall increments, with ranking by descending
/// `exp(-d)` and index tie-breaks.
pub fn pr_curve_map(points: &[Vec<f64>], labels: &[ClassId]) -> f64 {
    let n = points.len();
    let mut total = 0.0;
    let mut used = 0;
    for q in 0..n {
        let mut others: Vec<(f64, usize)> = (0..n)
            .filter(|&i| i != q)
            .map(|i| {
                let d: f64 = points[q]
                    .iter()
                    .zip(&points[i])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                ((-d).exp(), i)
            })
            .collect();
        others.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let relevant = others.iter().filter(|&&(_, i)| labels[i] == labels[q]).count();
        if relevant == 0 {
            continue;
        }
        let (mut hits, mut area, mut prev_recall) = (0usize, 0.0, 0.0);
        for (rank, &(_, i)) in others.iter().enumerate() {
            if labels[i] == labels[q] {
                hits += 1;
            }
            let precision = hits as f64 / (rank + 1) as f64;
            let recall = hits as f64 / relevant as f64;
            area += precision * (recall - prev_recall);
            prev_recall = recall;
        }
        total += area;
        used += 1;
    }
    total / used as f64
}

/// Nearest-class-mean accuracy with means estimated from all labelled
/// pixels.
pub fn nearest_mean_accuracy(ds: &triplet_watershed::data::HsiDataset) -> f64 {
    let (b, c) = (ds.bands(), ds.classes());
    let mut means = vec![vec![0.0f64; b]; c];
    let mut counts = vec![0usize; c];
    for p in 0..ds.n_pixels() {
        let l = ds.labels()[p] as usize;
        if l == 0 {
            continue;
        }
        counts[l - 1] += 1;
        for (m, &x) in means[l - 1].iter_mut().zip(ds.spectrum(p)) {
            *m += x as f64;
        }
    }
    for (m, &n) in means.iter_mut().zip(&counts) {
        m.iter_mut().for_each(|x| *x /= n as f64);
    }
    let (mut hit, mut total) = (0usize, 0usize);
    for p in 0..ds.n_pixels() {
        let l = ds.labels()[p] as usize;
        if l == 0 {
            continue;
        }
        let x = ds.spectrum(p);
        let best = (0..c)
            .min_by(|&i, &j| {
                let di: f64 = means[i].iter().zip(x).map(|(m, &v)| (m - v as f64).powi(2)).sum();
                let dj: f64 = means[j].iter().zip(x).map(|(m, &v)| (m - v as f64).powi(2)).sum();
                di.total_cmp(&dj)
            })
            .unwrap();
        total += 1;
        hit += usize::from(best + 1 == l);
    }
    hit as f64 / total as f64
}
