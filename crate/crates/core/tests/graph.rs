use mag_core::graph::{
    induced_subgraph, load_graph, normalize_adjacency, save_graph, validate_graph, Adjacency,
    AnomalyKind, Graph,
};
use mag_core::injection::{
    inject_benchmark, inject_contextual_traced, inject_structural, InjectionSpec,
};
use mag_core::rng::{stream, Purpose};
use mag_core::synthetic::PlantedPartition;
use ndarray::Array2;
use proptest::prelude::*;

fn graph_from(n: usize, edges: &[(usize, usize)], d: usize, salt: u64) -> Graph {
    let x = Array2::from_shape_fn((n, d), |(i, j)| {
        ((i * 31 + j * 7 + salt as usize) % 5) as f64 - 2.0
    });
    Graph::new(
        Adjacency::from_edges(n, edges.iter().copied()).unwrap(),
        x,
        None,
    )
    .unwrap()
}

fn edge_strategy(max_n: usize) -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (1..=max_n).prop_flat_map(|n| {
        let pairs = proptest::collection::vec((0..n, 0..n), 0..3 * n);
        (Just(n), pairs).prop_map(|(n, raw)| {
            let edges = raw.into_iter().filter(|(u, v)| u != v).collect();
            (n, edges)
        })
    })
}

proptest! {
    #[test]
    fn normalized_adjacency_matches_dense_definition((n, edges) in edge_strategy(50)) {
        let g = graph_from(n, &edges, 2, 0);
        let a_hat = normalize_adjacency(&g).to_dense();
        let mut a_bar = g.adjacency().to_dense();
        for i in 0..n {
            a_bar[[i, i]] += 1.0;
        }
        let deg: Vec<f64> = a_bar.rows().into_iter().map(|r| r.sum()).collect();
        for i in 0..n {
            for j in 0..n {
                let expected = a_bar[[i, j]] / (deg[i].sqrt() * deg[j].sqrt());
                prop_assert!((a_hat[[i, j]] - expected).abs() <= 1e-12);
                prop_assert_eq!(a_hat[[i, j]], a_hat[[j, i]]);
            }
        }
    }

    #[test]
    fn induced_subgraph_keeps_only_distinct_position_edges(
        (n, edges) in edge_strategy(20),
        picks in proptest::collection::vec(0usize..1000, 1..6),
    ) {
        let g = graph_from(n, &edges, 3, 1);
        let nodes: Vec<usize> = picks.iter().map(|p| p % n).collect();
        let (local, block) = induced_subgraph(&g, &nodes).unwrap();
        let m = nodes.len();
        let mut deg = vec![1.0f64; m];
        for a in 0..m {
            for b in 0..m {
                if a != b && nodes[a] != nodes[b] && g.adjacency().has_edge(nodes[a], nodes[b]) {
                    deg[a] += 1.0;
                }
            }
        }
        for a in 0..m {
            prop_assert_eq!(block.row(a), g.feature_row(nodes[a]));
            for b in 0..m {
                let linked = a == b
                    || (nodes[a] != nodes[b] && g.adjacency().has_edge(nodes[a], nodes[b]));
                let expected = if linked { 1.0 / (deg[a] * deg[b]).sqrt() } else { 0.0 };
                prop_assert!((local.get(a, b) - expected).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn regular_graphs_have_unit_row_sums() {
    for n in 3..12 {
        let cycle: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        let clique: Vec<_> = (0..n)
            .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
            .collect();
        for edges in [cycle, clique] {
            let a = normalize_adjacency(&graph_from(n, &edges, 1, 0)).to_dense();
            for row in a.rows() {
                assert!((row.sum() - 1.0).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn star_graph_hand_values() {
    let a = normalize_adjacency(&graph_from(4, &[(0, 1), (0, 2), (0, 3)], 1, 0));
    assert_eq!(a.get(0, 0), 0.25);
    assert_eq!(a.get(1, 1), 0.5);
    assert!((a.get(0, 2) - 1.0 / 8f64.sqrt()).abs() < 1e-15);
    assert_eq!(a.get(1, 2), 0.0);
}

#[test]
fn save_then_load_is_identity() {
    let g = PlantedPartition {
        nodes: 80,
        dim: 12,
        words_per_node: 3,
        seed: 5,
        ..Default::default()
    }
    .generate()
    .unwrap();
    let spec = InjectionSpec {
        clique_size: 4,
        num_cliques: 2,
        contextual_count: 8,
        candidate_pool: 10,
        seed: 3,
    };
    let g = inject_benchmark(&g, &spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (e, f, l) = (
        dir.path().join("e.txt"),
        dir.path().join("f.csv"),
        dir.path().join("l.csv"),
    );
    save_graph(&g, &e, &f, Some(&l)).unwrap();
    let back = load_graph(&e, &f, Some(&l)).unwrap();
    assert_eq!(back, g);
}

#[test]
fn structural_injection_builds_disjoint_cliques() {
    let g = graph_from(5, &[], 2, 0);
    let out = inject_structural(&g, 1, 2, &mut stream(0, Purpose::Inject, &[])).unwrap();
    assert_eq!(out.adjacency().num_edges(), 1);
    let labels = out.labels().unwrap();
    assert_eq!(
        labels
            .iter()
            .filter(|k| **k == AnomalyKind::Structural)
            .count(),
        2
    );

    let base = PlantedPartition::default().generate().unwrap();
    let out = inject_structural(&base, 3, 6, &mut stream(1, Purpose::Inject, &[])).unwrap();
    let members: Vec<usize> = (0..out.n())
        .filter(|&i| out.labels().unwrap()[i] == AnomalyKind::Structural)
        .collect();
    assert_eq!(members.len(), 18);
    // every member is adjacent to at least its 5 clique mates
    for &u in &members {
        let inside = members
            .iter()
            .filter(|&&v| out.adjacency().has_edge(u, v))
            .count();
        assert!(inside >= 5);
    }
    for (u, v) in base.adjacency().edges() {
        assert!(out.adjacency().has_edge(u, v));
    }
}

#[test]
fn contextual_rows_are_the_farthest_candidate() {
    let g = PlantedPartition {
        nodes: 300,
        seed: 2,
        ..Default::default()
    }
    .generate()
    .unwrap();
    let (out, trace) =
        inject_contextual_traced(&g, 40, 25, &mut stream(9, Purpose::Inject, &[])).unwrap();
    assert_eq!(trace.len(), 40);
    let x = g.features();
    let dist = |a: usize, b: usize| -> f64 {
        x.row(a)
            .iter()
            .zip(x.row(b))
            .map(|(p, q)| (p - q).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    for rec in &trace {
        assert_eq!(rec.candidates.len(), 25);
        assert!(!rec.candidates.contains(&rec.node));
        let best = rec
            .candidates
            .iter()
            .map(|&c| dist(rec.node, c))
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(dist(rec.node, rec.chosen), best);
        assert_eq!(out.feature_row(rec.node), x.row(rec.chosen));
        assert_eq!(out.labels().unwrap()[rec.node], AnomalyKind::Contextual);
    }
    assert_eq!(out.adjacency(), g.adjacency());
}

#[test]
fn benchmark_injection_is_deterministic_and_balanced() {
    let g = PlantedPartition {
        nodes: 500,
        seed: 4,
        ..Default::default()
    }
    .generate()
    .unwrap();
    let spec = InjectionSpec {
        clique_size: 10,
        num_cliques: 3,
        contextual_count: 30,
        candidate_pool: 50,
        seed: 11,
    };
    let a = inject_benchmark(&g, &spec).unwrap();
    let b = inject_benchmark(&g, &spec).unwrap();
    assert_eq!(a, b);
    let report = validate_graph(&a).unwrap();
    assert_eq!(report.structural, 30);
    assert_eq!(report.contextual, 30);
    assert_eq!(report.anomalies, 60);
    assert!(inject_benchmark(&a, &spec).is_err());
}
