mod common;

use proptest::prelude::*;
use triplet_watershed::classifier::classify_single;
use triplet_watershed::graph::{
    brute_force_max_margin, label_orphans, partition_margin, pass_value, watershed_label, ClassId,
    Graph, LabelArray, PassValueIndex, SeedSet,
};

fn graph_strategy(max_n: usize) -> impl Strategy<Value = Graph> {
    (2..=max_n, any::<u64>(), 0.0..0.6f64).prop_map(|(n, seed, extra)| {
        common::random_connected_graph(&mut common::rng(seed), n, extra)
    })
}

/// Distinct seed vertices with classes `0..k`, every class used.
fn seeds_for(n: usize, k: usize, seed: u64) -> SeedSet {
    use rand::seq::index::sample;
    let mut rng = common::rng(seed);
    let count = rand::Rng::random_range(&mut rng, k..=n.min(k + 2));
    let vs = sample(&mut rng, n, count).into_vec();
    SeedSet::from_pairs(vs.into_iter().enumerate().map(|(i, v)| (v, (i % k) as ClassId))).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn pass_value_matches_path_enumeration(g in graph_strategy(7)) {
        for u in 0..g.n_vertices() {
            for v in 0..g.n_vertices() {
                let got = pass_value(&g, u, v).unwrap();
                let want = common::brute_pass_value(&g, u, v).unwrap();
                prop_assert!(!got.disconnected);
                prop_assert_eq!(got.value.to_bits(), want.to_bits());
            }
        }
    }

    #[test]
    fn pass_value_is_an_ultrametric(g in graph_strategy(12)) {
        let idx = PassValueIndex::new(&g);
        let n = g.n_vertices();
        let rows: Vec<Vec<f64>> = (0..n).map(|u| idx.from_source(u).iter().map(|p| p.value).collect()).collect();
        for x in 0..n {
            prop_assert_eq!(rows[x][x], 0.0);
            for y in 0..n {
                prop_assert_eq!(rows[x][y], rows[y][x]);
                for z in 0..n {
                    prop_assert!(rows[x][z] <= rows[x][y].max(rows[y][z]));
                }
            }
        }
    }

    #[test]
    fn watershed_partition_has_maximum_margin(g in graph_strategy(8), s in any::<u64>()) {
        let seeds = seeds_for(g.n_vertices(), 2, s);
        let ws = watershed_label(&g, &seeds).unwrap();
        let got = partition_margin(&g, &seeds, &ws.labels).unwrap();
        let best = brute_force_max_margin(&g, &seeds).unwrap();
        prop_assert_eq!(got, best.margin);
    }

    #[test]
    fn monotone_reweighting_keeps_labels(g in graph_strategy(20), s in any::<u64>(), k in 1usize..4) {
        let seeds = seeds_for(g.n_vertices(), k.min(g.n_vertices()), s);
        let before = classify_single(&g, &seeds).unwrap();
        let mut h = g.clone();
        h.set_weights(g.weights().iter().map(|w| w.powi(3) + w).collect()).unwrap();
        prop_assert_eq!(before, classify_single(&h, &seeds).unwrap());
    }

    #[test]
    fn seeds_keep_their_labels_and_components_are_labelled(g in graph_strategy(20), s in any::<u64>()) {
        let seeds = seeds_for(g.n_vertices(), 3.min(g.n_vertices()), s);
        let ws = watershed_label(&g, &seeds).unwrap();
        for (v, c) in seeds.iter() {
            prop_assert_eq!(ws.labels.get(v), Some(c));
        }
        // Connected graph: every vertex gets a label.
        prop_assert_eq!(ws.labels.unlabeled_count(), 0);
        // Each union-find component is connected, holds a seed and one label.
        for comp in 0..ws.n_components {
            let members: Vec<usize> = (0..g.n_vertices()).filter(|&v| ws.components[v] == comp).collect();
            prop_assert!(members.iter().any(|&v| seeds.get(v).is_some()));
            prop_assert!(members.iter().all(|&v| ws.labels.get(v) == ws.labels.get(members[0])));
            let mut seen = vec![false; g.n_vertices()];
            let mut stack = vec![members[0]];
            seen[members[0]] = true;
            while let Some(v) = stack.pop() {
                for &(u, _) in g.neighbors(v) {
                    if !seen[u] && ws.components[u] == comp {
                        seen[u] = true;
                        stack.push(u);
                    }
                }
            }
            prop_assert!(members.iter().all(|&v| seen[v]));
        }
    }
}

#[test]
fn orphan_components_take_the_closest_seed_class() {
    use triplet_watershed::graph::Edge;
    // Two components; only the first carries seeds.
    let g = Graph::new(
        5,
        &[Edge::new(0, 1, 1.0), Edge::new(1, 2, 2.0), Edge::new(3, 4, 1.0)],
    )
    .unwrap();
    let seeds = SeedSet::from_pairs([(0, 0), (2, 1)]).unwrap();
    let ws = watershed_label(&g, &seeds).unwrap();
    assert_eq!(ws.labels.get(3), None);
    let o = label_orphans(&g, &ws.labels, &seeds).unwrap();
    assert_eq!(o.unresolved, vec![3, 4]);
    let o = label_orphans(&g, &LabelArray::unlabeled(5), &seeds).unwrap();
    assert_eq!(o.labels.as_slice()[..3], [Some(0), Some(0), Some(1)]);
}
