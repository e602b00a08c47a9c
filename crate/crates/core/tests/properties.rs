mod common;

use common::{brute_force_matching, random_digraph};
use nalgebra::DMatrix;
use ncrhok::centrality::{brandes_bc, brandes_bc_par, naive_bc};
use ncrhok::controllability::{
    exact_rank, max_matching, max_matching_size, min_driver_nodes, min_driver_nodes_undirected, simulate_attack,
    AttackSpec,
};
use ncrhok::graph::{BallMode, DirectedGraph};
use ncrhok::hypergraph::build_khop;
use ncrhok::netgen::{gen_er, gen_sf, GenSpec, Topology};
use ncrhok::seeded_rng;
use proptest::prelude::*;

fn digraph(max_n: usize) -> impl Strategy<Value = DirectedGraph> {
    (1..=max_n, 0.0..0.6f64, any::<u64>()).prop_map(|(n, p, seed)| random_digraph(&mut seeded_rng(seed), n, p))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn matching_is_maximum(g in digraph(7)) {
        let m = max_matching(&g);
        let mut tails = std::collections::HashSet::new();
        let mut heads = std::collections::HashSet::new();
        for (u, v) in m.edges() {
            prop_assert!(g.has_edge(u, v));
            prop_assert!(tails.insert(u) && heads.insert(v));
        }
        prop_assert_eq!(tails.len(), brute_force_matching(&g));
    }

    #[test]
    fn matching_grows_by_at_most_one_per_edge(g in digraph(12), u in 0usize..12, v in 0usize..12) {
        let (u, v) = (u % g.n(), v % g.n());
        prop_assume!(u != v && !g.has_edge(u, v));
        let before = max_matching_size(&g);
        let mut h = g.clone();
        h.add_edge(u, v).unwrap();
        let after = max_matching_size(&h);
        prop_assert!(after == before || after == before + 1);
        let nd = min_driver_nodes(&g).unwrap();
        prop_assert!((1..=g.n()).contains(&nd));
    }

    #[test]
    fn exact_rank_matches_svd(rows in 1usize..7, cols in 1usize..7, seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = seeded_rng(seed);
        // low-rank products make rank deficiency common
        let inner = rng.random_range(1..=rows.min(cols));
        let a: Vec<i64> = (0..rows * inner).map(|_| rng.random_range(-2..=2)).collect();
        let b: Vec<i64> = (0..inner * cols).map(|_| rng.random_range(-2..=2)).collect();
        let mut m = vec![0i64; rows * cols];
        for i in 0..rows {
            for j in 0..cols {
                m[i * cols + j] = (0..inner).map(|k| a[i * inner + k] * b[k * cols + j]).sum();
            }
        }
        let dense = DMatrix::from_row_iterator(rows, cols, m.iter().map(|&x| x as f64));
        prop_assert_eq!(exact_rank(rows, cols, &m), dense.rank(1e-9));
    }

    #[test]
    fn undirected_driver_nodes_match_svd(g in digraph(9)) {
        let mut s = g.clone();
        for (u, v) in g.edges() {
            if !s.has_edge(v, u) {
                s.add_edge(v, u).unwrap();
            }
        }
        let n = s.n();
        let a = DMatrix::from_fn(n, n, |i, j| if s.has_edge(i, j) { 1.0 } else { 0.0 });
        let expected = n.saturating_sub(a.rank(1e-9)).max(1);
        prop_assert_eq!(min_driver_nodes_undirected(&s).unwrap(), expected);
    }

    #[test]
    fn brandes_agrees_with_path_enumeration(g in digraph(24)) {
        let fast = brandes_bc(&g);
        let slow = naive_bc(&g).unwrap();
        let par = brandes_bc_par(&g);
        for v in 0..g.n() {
            prop_assert!((fast.0[v] - slow.0[v]).abs() <= 1e-9);
            prop_assert!((fast.0[v] - par.0[v]).abs() <= 1e-12);
            prop_assert!(fast.0[v] >= 0.0);
        }
    }

    #[test]
    fn betweenness_is_permutation_equivariant(g in digraph(20), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut perm: Vec<usize> = (0..g.n()).collect();
        perm.shuffle(&mut seeded_rng(seed));
        let h = g.permuted(&perm).unwrap();
        let (a, b) = (brandes_bc(&g), brandes_bc(&h));
        for v in 0..g.n() {
            prop_assert!((a.0[v] - b.0[perm[v]]).abs() <= 1e-9);
        }
    }

    #[test]
    fn removing_a_node_keeps_every_other_edge(g in digraph(15), v in 0usize..15) {
        let v = v % g.n();
        let h = g.without_node(v).unwrap();
        let kept: Vec<(usize, usize)> = g.edges().filter(|&(a, b)| a != v && b != v).collect();
        prop_assert_eq!(h.edges().collect::<Vec<_>>(), kept);
        prop_assert_eq!(h.node_count(), g.node_count() - 1);
        prop_assert!(h.in_neighbors(v).is_empty() && h.out_neighbors(v).is_empty());
    }

    #[test]
    fn balls_grow_with_radius(g in digraph(15), v in 0usize..15) {
        let v = v % g.n();
        for mode in [BallMode::Undirected, BallMode::OutReach] {
            let mut prev = g.k_ball(v, 0, mode);
            prop_assert_eq!(&prev, &vec![v]);
            for k in 1..4 {
                let ball = g.k_ball(v, k, mode);
                prop_assert!(prev.iter().all(|u| ball.binary_search(u).is_ok()));
                prev = ball;
            }
        }
        let mut one: Vec<usize> = g.in_neighbors(v).iter().chain(g.out_neighbors(v)).copied().collect();
        one.push(v);
        one.sort_unstable();
        one.dedup();
        prop_assert_eq!(g.k_ball(v, 1, BallMode::Undirected), one);
    }

    #[test]
    fn khop_edges_are_balls(g in digraph(12), k in 1usize..4) {
        let h = build_khop(&g, k, BallMode::Undirected).unwrap();
        prop_assert_eq!(h.edge_count(), g.n());
        for v in 0..g.n() {
            let ball = g.k_ball(v, k, BallMode::Undirected);
            prop_assert_eq!(h.edge(v), ball.as_slice());
        }
    }

    #[test]
    fn generators_hit_the_edge_count(t in 0usize..4, n in 10usize..60, k in 1usize..6, seed in any::<u64>()) {
        let topology = [Topology::Er, Topology::Sf, Topology::Qsn, Topology::Sw][t];
        let spec = GenSpec::new(topology, n, k as f64, seed);
        let g = spec.generate().unwrap();
        prop_assert_eq!(g.edge_count(), n * k);
        prop_assert!(g.edges().all(|(u, v)| u != v));
        prop_assert_eq!(g.edges().collect::<Vec<_>>(), spec.generate().unwrap().edges().collect::<Vec<_>>());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn curves_stay_in_unit_interval(g in digraph(25), kind in 0usize..3, seed in any::<u64>()) {
        prop_assume!(g.n() >= 2);
        let attack = match kind {
            0 => AttackSpec::random(seed),
            1 => AttackSpec::degree(),
            _ => AttackSpec::betweenness(),
        };
        let run = simulate_attack(&g, &attack, Some(&brandes_bc)).unwrap();
        let c = run.curve.values();
        prop_assert_eq!(c.len(), g.n() - 1);
        prop_assert!(c.iter().all(|&x| x > 0.0 && x <= 1.0));
        prop_assert_eq!(*c.last().unwrap(), 1.0);
    }
}

#[test]
fn er_degrees_are_roughly_poisson() {
    let mut ratio = 0.0;
    for s in 0..200 {
        let g = gen_er(100, 5.0, &mut seeded_rng(s)).unwrap();
        let d: Vec<f64> = (0..100).map(|v| g.total_degree(v) as f64).collect();
        let mean = d.iter().sum::<f64>() / 100.0;
        let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 100.0;
        ratio += var / mean / 200.0;
    }
    assert!((0.7..=1.3).contains(&ratio), "variance/mean {ratio}");
}

/// Hill estimate of the degree exponent from the top 5% of total degrees.
fn hill_exponent(g: &DirectedGraph) -> f64 {
    let mut d: Vec<f64> = (0..g.n()).map(|v| g.total_degree(v) as f64).collect();
    d.sort_by(|a, b| b.total_cmp(a));
    let k = g.n() / 20;
    let xi = d[..k].iter().map(|x| (x / d[k]).ln()).sum::<f64>() / k as f64;
    1.0 + 1.0 / xi
}

#[test]
fn scale_free_tail_exponent() {
    for s in 0..5 {
        let g = gen_sf(1000, 5.0, 0.999, 1.0, &mut seeded_rng(s)).unwrap();
        let gamma = hill_exponent(&g);
        assert!((gamma - 2.001).abs() <= 0.5, "seed {s}: exponent {gamma}");
    }
}
