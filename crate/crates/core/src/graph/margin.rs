use super::{ClassId, Graph, LabelArray, PassValue, SeedSet};
use crate::error::{Error, Result};

/// Vertex limit for [`brute_force_max_margin`].
pub const BRUTE_FORCE_LIMIT: usize = 16;
const MAX_ASSIGNMENTS: u64 = 1 << 24;

#[derive(Debug, Clone, PartialEq)]
pub struct MaxMargin {
    pub margin: PassValue,
    pub labels: LabelArray,
}

/// Margin of a labelling: the minimum over seed classes `c` of the set
/// dissimilarity between the class-`c` seeds and every vertex not labelled
/// `c`. Infinite (disconnected) when no such vertex is reachable.
pub fn partition_margin(g: &Graph, seeds: &SeedSet, labels: &LabelArray) -> Result<PassValue> {
    if labels.len() != g.n_vertices() {
        return Err(Error::Config("label array does not match graph".into()));
    }
    let mut margin = PassValue::DISCONNECTED;
    for (class, xs) in seeds.by_class() {
        let others: Vec<usize> = (0..g.n_vertices())
            .filter(|&v| labels.get(v) != Some(class))
            .collect();
        if !others.is_empty() {
            margin = margin.min(super::set_dissimilarity(g, &xs, &others)?);
        }
    }
    Ok(margin)
}

/// Exhaustive search for a seed-respecting labelling that maximizes the
/// margin of [`partition_margin`]. Test oracle for small graphs only.
///
/// Pass values come from a minimax Floyd-Warshall closure, independent of
/// the spanning-tree route used elsewhere. The first maximizer in
/// lexicographic order of the free-vertex assignment is returned.
pub fn brute_force_max_margin(g: &Graph, seeds: &SeedSet) -> Result<MaxMargin> {
    let n = g.n_vertices();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge {
            limit: BRUTE_FORCE_LIMIT,
            got: n,
        });
    }
    if seeds.is_empty() {
        return Err(Error::Empty("seed set"));
    }
    seeds.check_range(n)?;
    let classes = seeds.classes();
    let free: Vec<usize> = (0..n).filter(|&v| seeds.get(v).is_none()).collect();
    let k = classes.len() as u64;
    let total = k
        .checked_pow(free.len() as u32)
        .filter(|&t| t <= MAX_ASSIGNMENTS)
        .ok_or_else(|| Error::Config("too many labellings to enumerate".into()))?;

    let rho = minimax_closure(g);
    // to_class[c][y]: smallest pass value from a class-c seed to y.
    let by_class = seeds.by_class();
    let to_class: Vec<Vec<PassValue>> = classes
        .iter()
        .map(|c| {
            (0..n)
                .map(|y| {
                    by_class[c]
                        .iter()
                        .map(|&x| rho[x * n + y])
                        .fold(PassValue::DISCONNECTED, PassValue::min)
                })
                .collect()
        })
        .collect();

    let mut assign: Vec<usize> = (0..n)
        .map(|v| seeds.get(v).map_or(0, |c| class_index(&classes, c)))
        .collect();
    let mut best: Option<(PassValue, Vec<usize>)> = None;
    for code in 0..total {
        let mut rest = code;
        for &v in free.iter().rev() {
            assign[v] = (rest % k) as usize;
            rest /= k;
        }
        let mut margin = PassValue::DISCONNECTED;
        for y in 0..n {
            for (ci, dist) in to_class.iter().enumerate() {
                if ci != assign[y] {
                    margin = margin.min(dist[y]);
                }
            }
        }
        if best.as_ref().is_none_or(|(m, _)| margin.total_cmp(m).is_gt()) {
            best = Some((margin, assign.clone()));
        }
    }
    let (margin, assign) = best.expect("at least one labelling");
    let labels = LabelArray::from_vec(assign.iter().map(|&i| Some(classes[i])).collect());
    Ok(MaxMargin { margin, labels })
}

fn class_index(classes: &[ClassId], c: ClassId) -> usize {
    classes.binary_search(&c).expect("class listed")
}

fn minimax_closure(g: &Graph) -> Vec<PassValue> {
    let n = g.n_vertices();
    let mut rho = vec![PassValue::DISCONNECTED; n * n];
    for v in 0..n {
        rho[v * n + v] = PassValue::ZERO;
    }
    for e in g.edges() {
        let w = PassValue::finite(e.w);
        rho[e.u * n + e.v] = rho[e.u * n + e.v].min(w);
        rho[e.v * n + e.u] = rho[e.v * n + e.u].min(w);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = rho[i * n + k].max(rho[k * n + j]);
                rho[i * n + j] = rho[i * n + j].min(via);
            }
        }
    }
    rho
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{watershed_label, Edge};

    #[test]
    fn path_graph_oracle() {
        let g = Graph::new(3, &[Edge::new(0, 1, 1.0), Edge::new(1, 2, 2.0)]).unwrap();
        let seeds = SeedSet::from_pairs([(0, 0), (2, 1)]).unwrap();
        let best = brute_force_max_margin(&g, &seeds).unwrap();
        assert_eq!(best.margin, PassValue::finite(2.0));
        assert_eq!(best.labels.as_slice(), &[Some(0), Some(0), Some(1)]);
        let alt = LabelArray::from_vec(vec![Some(0), Some(1), Some(1)]);
        assert_eq!(partition_margin(&g, &seeds, &alt).unwrap(), PassValue::finite(1.0));
        let ws = watershed_label(&g, &seeds).unwrap();
        assert_eq!(partition_margin(&g, &seeds, &ws.labels).unwrap(), best.margin);
    }

    #[test]
    fn isolated_seeds_have_unbounded_margin() {
        let g = Graph::new(2, &[]).unwrap();
        let seeds = SeedSet::from_pairs([(0, 0), (1, 1)]).unwrap();
        let best = brute_force_max_margin(&g, &seeds).unwrap();
        assert!(best.margin.disconnected);
    }

    #[test]
    fn guards_size() {
        let g = Graph::new(17, &[]).unwrap();
        let seeds = SeedSet::from_pairs([(0, 0)]).unwrap();
        assert!(matches!(
            brute_force_max_margin(&g, &seeds),
            Err(Error::TooLarge { limit: 16, got: 17 })
        ));
    }
}
