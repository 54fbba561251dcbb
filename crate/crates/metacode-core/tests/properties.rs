//! Generative property tests for the invariants the module contracts
//! promise: oracle soundness and completeness, query-order independence,
//! strategy coverage at full budget, edge-probability monotonicity,
//! affiliation non-negativity, and metric symmetries.

use std::collections::BTreeSet;

use proptest::prelude::*;

use metacode_core::dataset::{CommunityCover, NodeFeatures};
use metacode_core::embed::{edge_prob, gcn_forward, NormalizedAdjacency};
use metacode_core::explore::QueryState;
use metacode_core::graph::{ordered, HiddenNetwork, NodeId, ObservedNetwork, QueryOracle};
use metacode_core::init::{agm_infer, mac_cluster, MacOptions};
use metacode_core::metrics::{best_match_f1, explored_count, overlapping_nmi};
use metacode_core::{AffiliationMatrix, ModelParams};

/// A random hidden network over `n` nodes together with a trivial
/// one-community cover (the metrics are exercised separately).
fn hidden_network(n: usize) -> impl Strategy<Value = HiddenNetwork> {
    let pairs: Vec<(NodeId, NodeId)> =
        (0..n).flat_map(|u| ((u + 1)..n).map(move |v| (u, v))).collect();
    proptest::sample::subsequence(pairs.clone(), 0..=pairs.len()).prop_map(move |edges| {
        let cover = CommunityCover::new(vec![(0..n).collect()]);
        HiddenNetwork::new(n, edges, cover).expect("valid network")
    })
}

/// A query order: some prefix of a permutation of the nodes.
fn query_sequence(n: usize) -> impl Strategy<Value = Vec<NodeId>> {
    proptest::sample::subsequence((0..n).collect::<Vec<_>>(), 0..=n).prop_shuffle()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Every revealed edge is a true edge, every true edge incident to a
    /// queried node is revealed, and inferred edges never touch queried
    /// nodes.
    #[test]
    fn oracle_is_sound_and_complete_at_queried_nodes(
        hidden in hidden_network(8),
        queries in query_sequence(8),
    ) {
        let truth = hidden.edges();
        let mut oracle = QueryOracle::new(&hidden, queries.len());
        // Start from a deliberately wrong inferred guess: the complement
        // edges of node 0.
        let wrong: Vec<(NodeId, NodeId)> = (1..8)
            .map(|v| (0, v))
            .filter(|e| !truth.contains(e))
            .collect();
        let mut g = ObservedNetwork::with_inferred(8, wrong).unwrap();
        for &u in &queries {
            let neighbors = oracle.query(u).unwrap();
            g.integrate_query(u, &neighbors).unwrap();
        }
        prop_assert!(g.revealed().is_subset(&truth), "revealed must stay within the truth");
        for &(u, v) in &truth {
            if g.queried().contains(&u) || g.queried().contains(&v) {
                prop_assert!(g.revealed().contains(&(u, v)),
                    "true edge ({u},{v}) incident to a queried node must be revealed");
            }
        }
        for &(u, v) in g.inferred() {
            prop_assert!(!g.queried().contains(&u) && !g.queried().contains(&v));
        }
    }

    /// The observation depends on the set of queries applied, not their
    /// order.
    #[test]
    fn observation_is_order_independent(
        hidden in hidden_network(7),
        queries in query_sequence(7),
    ) {
        let apply = |order: &[NodeId]| {
            let mut oracle = QueryOracle::new(&hidden, order.len());
            let mut g = ObservedNetwork::new(7);
            for &u in order {
                let neighbors = oracle.query(u).unwrap();
                g.integrate_query(u, &neighbors).unwrap();
            }
            g
        };
        let forward = apply(&queries);
        let mut reversed_order = queries.clone();
        reversed_order.reverse();
        let reversed = apply(&reversed_order);
        prop_assert_eq!(forward.revealed(), reversed.revealed());
        prop_assert_eq!(forward.inferred(), reversed.inferred());
        prop_assert_eq!(forward.queried(), reversed.queried());
    }

    /// explored_count never decreases as queries accumulate.
    #[test]
    fn explored_count_is_monotone(
        hidden in hidden_network(8),
        queries in query_sequence(8),
    ) {
        let mut oracle = QueryOracle::new(&hidden, queries.len());
        let mut g = ObservedNetwork::new(8);
        let mut last = explored_count(&g);
        for &u in &queries {
            let neighbors = oracle.query(u).unwrap();
            g.integrate_query(u, &neighbors).unwrap();
            let now = explored_count(&g);
            prop_assert!(now >= last);
            last = now;
        }
    }

    /// Run to budget N, every strategy queries each node exactly once.
    #[test]
    fn strategies_cover_all_nodes_at_full_budget(
        hidden in hidden_network(6),
        strategy in 0usize..3,
        seed in 0u64..1000,
    ) {
        let n = hidden.n_nodes();
        let mut oracle = QueryOracle::new(&hidden, n);
        let mut g = ObservedNetwork::new(n);
        let mut state = QueryState::new(seed, 1.0).unwrap();
        // Fixed affiliations for the guided strategy; selection must still
        // avoid already-queried nodes.
        let f = AffiliationMatrix {
            values: ndarray::Array2::from_shape_fn((n, 2), |(u, k)| ((u + k) % 3) as f64),
        };
        for _ in 0..n {
            let u = match strategy {
                0 => state.select_metacode(&f).unwrap(),
                1 => state.select_random(n).unwrap(),
                _ => state.select_dfs(&g).unwrap(),
            };
            prop_assert!(!state.is_queried(u), "selection must avoid queried nodes");
            let neighbors = oracle.query(u).unwrap();
            g.integrate_query(u, &neighbors).unwrap();
            state.note_query(u, &neighbors);
        }
        prop_assert_eq!(state.queried_order().len(), n);
        let unique: BTreeSet<NodeId> = state.queried_order().iter().copied().collect();
        prop_assert_eq!(unique.len(), n, "every node queried exactly once");
    }

    /// edge_prob stays in [0, 1) and increases strictly with the dot
    /// product of the affiliation rows.
    #[test]
    fn edge_prob_is_bounded_and_increasing(dots in proptest::collection::vec(0.0f64..30.0, 2..20)) {
        let mut sorted = dots;
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        sorted.dedup();
        let unit = ndarray::arr1(&[1.0]);
        let probs: Vec<f64> = sorted
            .iter()
            .map(|&d| edge_prob(ndarray::arr1(&[d]).view(), unit.view()))
            .collect();
        for &p in &probs {
            prop_assert!((0.0..1.0).contains(&p));
        }
        for pair in probs.windows(2) {
            prop_assert!(pair[0] < pair[1], "edge_prob must be strictly increasing");
        }
    }

    /// The inferred initial network only links nodes that share at least
    /// one community.
    #[test]
    fn initial_inference_respects_shared_affiliation(
        rows in proptest::collection::vec(proptest::collection::vec(any::<bool>(), 5), 4..10),
        seed in 0u64..200,
    ) {
        // Guarantee a non-trivial instance: at least one set bit per row.
        let rows: Vec<Vec<bool>> = rows
            .into_iter()
            .map(|mut r| {
                if r.iter().all(|&b| !b) {
                    r[0] = true;
                }
                r
            })
            .collect();
        let x = NodeFeatures::from_rows(rows).unwrap();
        let mac = mac_cluster(&x, 2, seed, &MacOptions::default()).unwrap();
        let memberships = mac.affiliation.memberships();
        for (u, v) in agm_infer(&mac.affiliation, seed) {
            prop_assert!(
                memberships[u].intersection(&memberships[v]).next().is_some(),
                "inferred edge ({u},{v}) links nodes with no shared community"
            );
        }
    }

    /// The rectified forward pass never produces a negative affiliation,
    /// whatever the seed.
    #[test]
    fn affiliations_are_non_negative(seed in 0u64..500) {
        let g = ObservedNetwork::with_inferred(5, [(0, 1), (1, 2), (3, 4)]).unwrap();
        let x = NodeFeatures::from_rows(vec![
            vec![true, false],
            vec![true, true],
            vec![false, true],
            vec![true, false],
            vec![false, true],
        ])
        .unwrap();
        let params = ModelParams::init(2, 3, 2, seed).unwrap();
        let adj = NormalizedAdjacency::from_observed(&g);
        let f = gcn_forward(&adj, &x, &params).unwrap();
        prop_assert!(f.values.iter().all(|&v| v >= 0.0));
    }

    /// Metrics are symmetric and invariant under a node relabeling applied
    /// to both covers.
    #[test]
    fn metrics_are_symmetric_and_relabel_invariant(
        perm in Just::<Vec<usize>>((0..10).collect()).prop_shuffle(),
        a_sets in proptest::collection::vec(proptest::collection::btree_set(0usize..10, 1..6), 1..4),
        b_sets in proptest::collection::vec(proptest::collection::btree_set(0usize..10, 1..6), 1..4),
    ) {
        let a = CommunityCover::new(a_sets.clone());
        let b = CommunityCover::new(b_sets.clone());
        let nmi_ab = overlapping_nmi(&a, &b, 10).unwrap();
        let nmi_ba = overlapping_nmi(&b, &a, 10).unwrap();
        prop_assert!((nmi_ab - nmi_ba).abs() < 1e-12);
        prop_assert!((best_match_f1(&a, &b) - best_match_f1(&b, &a)).abs() == 0.0);

        let relabel = |sets: &[BTreeSet<usize>]| -> CommunityCover {
            CommunityCover::new(
                sets.iter().map(|s| s.iter().map(|&u| perm[u]).collect()).collect(),
            )
        };
        let (ap, bp) = (relabel(&a_sets), relabel(&b_sets));
        prop_assert!((overlapping_nmi(&ap, &bp, 10).unwrap() - nmi_ab).abs() < 1e-12);
        prop_assert!((best_match_f1(&ap, &bp) - best_match_f1(&a, &b)).abs() < 1e-12);
    }

    /// Normalized edges stay normalized: `ordered` is idempotent and
    /// symmetric.
    #[test]
    fn ordered_normalizes_pairs(u in 0usize..50, v in 0usize..50) {
        let (a, b) = ordered(u, v);
        prop_assert!(a <= b);
        prop_assert_eq!(ordered(u, v), ordered(v, u));
        prop_assert_eq!(ordered(a, b), (a, b));
    }
}
