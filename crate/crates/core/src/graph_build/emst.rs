/// Squared Euclidean distance, summed in index order.
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        s += d * d;
    }
    s
}

/// Exact Euclidean minimum spanning tree of `points` (row-major, `dim`
/// columns) by dense Prim, `O(n^2 dim)`. Returns `(u, v, distance)` with
/// `u < v`, in the order edges join the tree.
///
/// Among equal distances the lexicographically smallest vertex pair wins.
pub fn euclidean_mst(points: &[f64], dim: usize) -> Vec<(usize, usize, f64)> {
    let n = points.len().checked_div(dim).unwrap_or(0);
    if n < 2 {
        return Vec::new();
    }
    let row = |i: usize| &points[i * dim..(i + 1) * dim];
    let pair = |a: usize, b: usize| (a.min(b), a.max(b));
    let mut in_tree = vec![false; n];
    let mut best: Vec<(f64, usize)> = vec![(f64::INFINITY, usize::MAX); n];
    let mut tree = Vec::with_capacity(n - 1);
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..n {
        let xc = row(current);
        let mut pick: Option<(f64, (usize, usize), usize)> = None;
        for v in 0..n {
            if in_tree[v] {
                continue;
            }
            let d = squared_distance(xc, row(v));
            let (bd, bp) = best[v];
            if d < bd || (d == bd && pair(current, v) < pair(bp, v)) {
                best[v] = (d, current);
            }
            let key = (best[v].0, pair(best[v].1, v), v);
            if pick.is_none_or(|p| key.0 < p.0 || (key.0 == p.0 && key.1 < p.1)) {
                pick = Some(key);
            }
        }
        let (d, (u, w), v) = pick.expect("vertices remain");
        in_tree[v] = true;
        tree.push((u, w, d.sqrt()));
        current = v;
    }
    tree
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collinear_points_chain() {
        let pts = [0.0, 3.0, 1.0, 10.0];
        let t = euclidean_mst(&pts, 1);
        assert_eq!(t, vec![(0, 2, 1.0), (1, 2, 2.0), (1, 3, 7.0)]);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(euclidean_mst(&[], 2).is_empty());
        assert!(euclidean_mst(&[1.0, 2.0], 2).is_empty());
        // Duplicate points give zero-length edges.
        assert_eq!(euclidean_mst(&[1.0, 1.0], 1), vec![(0, 1, 0.0)]);
    }
}
