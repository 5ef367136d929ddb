// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};

use engagegraph::community::{
    gate_communities, label_propagation, node_importance, CommunityAssignment, ImportanceMode,
};
use engagegraph::graph::{EdgeWeight, InteractionGraph};
use engagegraph::influence::{pagerank, scale_scores, PageRankParams};
use engagegraph::topics::{kmeans, nearest, sse, KMeansParams};
use proptest::prelude::*;

fn arb_graph() -> impl Strategy<Value = (usize, Vec<(usize, usize, u64, u64)>)> {
    (1usize..25).prop_flat_map(|n| {
        let edge = (0..n, 0..n, 0u64..3, 0u64..3);
        (Just(n), proptest::collection::vec(edge, 0..60))
    })
}

fn build(n: usize, edges: &[(usize, usize, u64, u64)], name: impl Fn(usize) -> String) -> InteractionGraph {
    InteractionGraph::from_named_edges(
        (0..n).map(&name),
        edges
            .iter()
            .filter(|&&(s, d, r, p)| s != d && r + p > 0)
            .map(|&(s, d, r, p)| {
                (
                    name(s),
                    name(d),
                    EdgeWeight {
                        retweets: r,
                        replies: p,
                    },
                )
            }),
    )
    .expect("valid graph")
}

fn by_name(g: &InteractionGraph, scores: &[f64]) -> BTreeMap<String, f64> {
    g.nodes().iter().cloned().zip(scores.iter().copied()).collect()
}

fn importance(g: &InteractionGraph) -> Vec<f64> {
    node_importance(g, ImportanceMode::WeightedInDegree, PageRankParams::default(), 0.0).unwrap()
}

fn assert_partition(g: &InteractionGraph, a: &CommunityAssignment) {
    assert!(a.is_consistent());
    let labelled: BTreeSet<&String> = a.labels.keys().collect();
    let nodes: BTreeSet<&String> = g.nodes().iter().collect();
    assert_eq!(labelled, nodes);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn pagerank_is_a_distribution((n, edges) in arb_graph()) {
        let g = build(n, &edges, |i| format!("u{i:02}"));
        let r = pagerank(&g, PageRankParams::default()).unwrap();
        let sum: f64 = r.scores.iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-9);
        prop_assert!(r.scores.iter().all(|s| (0.0..=1.0).contains(s)));
    }

    #[test]
    fn pagerank_follows_relabeling((n, edges) in arb_graph(), perm_seed in any::<u64>()) {
        let mut perm: Vec<usize> = (0..n).collect();
        let mut state = perm_seed;
        for i in (1..n).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (state >> 33) as usize % (i + 1));
        }
        let a = build(n, &edges, |i| format!("u{i:02}"));
        let b = build(n, &edges, |i| format!("w{:02}", perm[i]));
        let ra = by_name(&a, &pagerank(&a, PageRankParams::default()).unwrap().scores);
        let rb = by_name(&b, &pagerank(&b, PageRankParams::default()).unwrap().scores);
        for i in 0..n {
            let x = ra[&format!("u{i:02}")];
            let y = rb[&format!("w{:02}", perm[i])];
            prop_assert!((x - y).abs() <= 1e-12, "node {}: {} vs {}", i, x, y);
        }
    }

    #[test]
    fn scaling_preserves_argmax((n, edges) in arb_graph()) {
        let g = build(n, &edges, |i| format!("u{i:02}"));
        let raw = pagerank(&g, PageRankParams::default()).unwrap().scores;
        let scaled = scale_scores(&raw);
        let argmax = |v: &[f64]| v.iter().enumerate().fold(0, |b, (i, x)| if *x > v[b] { i } else { b });
        prop_assert_eq!(argmax(&raw), argmax(&scaled));
        prop_assert!(scaled.iter().all(|s| (0.0..=10.0).contains(s)));
    }

    #[test]
    fn induced_subgraph_on_all_nodes_is_identity((n, edges) in arb_graph()) {
        let g = build(n, &edges, |i| format!("u{i:02}"));
        let h = g.induced_subgraph(g.nodes().iter().map(String::as_str)).unwrap();
        prop_assert_eq!(h, g);
    }

    #[test]
    fn labels_partition_the_nodes((n, edges) in arb_graph(), seed in any::<u64>()) {
        let g = build(n, &edges, |i| format!("u{i:02}"));
        let a = label_propagation(&g, &importance(&g), seed, 100);
        assert_partition(&g, &a);
    }

    #[test]
    fn label_propagation_ignores_thread_count((n, edges) in arb_graph(), seed in any::<u64>()) {
        let g = build(n, &edges, |i| format!("u{i:02}"));
        let imp = importance(&g);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| label_propagation(&g, &imp, seed, 100))
        };
        prop_assert_eq!(run(1), run(4));
    }

    #[test]
    fn disjoint_cliques_are_recovered(sizes in proptest::collection::vec(2usize..7, 1..5), seed in any::<u64>()) {
        let mut edges = Vec::new();
        let mut groups = Vec::new();
        let mut next = 0;
        for s in sizes {
            let members: Vec<usize> = (next..next + s).collect();
            for &a in &members {
                for &b in &members {
                    if a != b {
                        edges.push((a, b, 1, 0));
                    }
                }
            }
            next += s;
            groups.push(members);
        }
        let name = |i: usize| format!("c{i:02}");
        let g = build(next, &edges, name);
        let a = label_propagation(&g, &importance(&g), seed, 100);
        let got: BTreeSet<Vec<String>> = a.communities.iter().map(|c| c.members.clone()).collect();
        let want: BTreeSet<Vec<String>> = groups.iter().map(|m| m.iter().map(|&i| name(i)).collect()).collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn gate_only_drops((n, edges) in arb_graph(), seed in any::<u64>(), min in 0usize..6) {
        let g = build(n, &edges, |i| format!("u{i:02}"));
        let a = label_propagation(&g, &importance(&g), seed, 100);
        let (kept, stats) = gate_communities(&a, min);
        prop_assert!(kept.is_consistent());
        for c in &kept.communities {
            prop_assert!(c.size > min);
            prop_assert!(a.communities.iter().any(|o| o.members == c.members));
        }
        prop_assert_eq!(kept.communities.len() + stats.communities_dropped, a.communities.len());
    }

    #[test]
    fn kmeans_descends_and_ends_at_nearest(
        points in proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 3), 4..80),
        k in 1usize..5,
        seed in any::<u64>(),
    ) {
        let params = KMeansParams { k, seed, max_iter: 100 };
        let r = kmeans(&points, params).unwrap();
        for w in r.sse_history.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12, "SSE rose {} -> {}", w[0], w[1]);
        }
        prop_assert!((sse(&points, &r.assignments, &r.centroids) - r.sse_history.last().unwrap()).abs() <= 1e-9);
        if r.converged {
            for (p, &a) in points.iter().zip(&r.assignments) {
                let (_, best) = nearest(p, &r.centroids);
                let own: f64 = p.iter().zip(&r.centroids[a]).map(|(x, y)| (x - y) * (x - y)).sum();
                prop_assert!(own <= best + 1e-12);
            }
        }
        prop_assert_eq!(kmeans(&points, params).unwrap(), r);
    }
}
