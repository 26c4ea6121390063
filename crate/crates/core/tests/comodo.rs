mod common;

use rand::Rng;
use sinet_core::comodo::*;
use sinet_core::netstats::{CommunityMeasure, GraphTotals};
use sinet_core::synth::{planted_attribute_graph, PlantedAttributes};
use sinet_core::{AttributeTable, Selector};

use common::{all_patterns, brute_force_top_k, direct_stats, graph, graph_selectors, members, oracle_quality, pattern_keys};

fn two_cliques() -> (sinet_core::InteractionGraph, AttributeTable) {
    let g = common::two_triangles();
    let mut t = AttributeTable::new();
    for a in ["a", "b", "c"] {
        t.insert(a, Selector::new("lab", "red"));
    }
    for a in ["d", "e", "f"] {
        t.insert(a, Selector::new("lab", "blue"));
    }
    (g, t)
}

#[test]
fn two_clique_fixture() {
    let (g, t) = two_cliques();
    let out = mine_top_k(&g, &t, MiningConfig { k: 2, ..MiningConfig::default() }).unwrap();
    let names: Vec<String> = out.patterns.iter().map(|p| p.selectors[0].to_string()).collect();
    assert_eq!(names, ["lab=blue", "lab=red"]);
    assert!(out.patterns.iter().all(|p| p.quality == 0.25 && p.members.len() == 3));
    // k above the number of qualifying patterns returns all of them
    assert_eq!(mine_top_k(&g, &t, MiningConfig { k: 50, ..MiningConfig::default() }).unwrap().patterns.len(), 2);
    assert!(mine_top_k(&g, &t, MiningConfig { min_size: 4, ..MiningConfig::default() }).unwrap().patterns.is_empty());
}

#[test]
fn hand_traced_tree_payload() {
    let g = graph(&[("u", "v", 2.0)]);
    let mut t = AttributeTable::new();
    t.insert("u", Selector::new("s", "1"));
    t.insert("v", Selector::new("s", "1"));
    let cp = build_cp_tree(&g, &t);
    let nodes: Vec<_> = cp.nodes().collect();
    assert_eq!(nodes.len(), 1);
    assert_eq!((nodes[0].1.node_count, nodes[0].1.degree_sum, nodes[0].1.edge_weight), (2, 4.0, 2.0));

    let mut disjoint = AttributeTable::new();
    disjoint.insert("u", Selector::new("s", "1"));
    disjoint.insert("v", Selector::new("s", "2"));
    let cp = build_cp_tree(&g, &disjoint);
    assert!(cp.nodes().all(|(_, p)| p.edge_weight == 0.0));
    assert_eq!(cp.totals().total_weight, 2.0);
}

#[test]
fn tree_statistics_match_the_graph() {
    let mut r = common::rng(21);
    for _ in 0..50 {
        let (g, t) = common::random_attributed_graph(&mut r, 10, 5);
        let cp = build_cp_tree(&g, &t);
        for s in graph_selectors(&g, &t) {
            let headers: usize = cp.nodes().filter(|(sel, _)| **sel == s).map(|(_, p)| p.node_count).sum();
            assert_eq!(Some(headers), cp.frequency(&s));
        }
        for p in all_patterns(&graph_selectors(&g, &t), 3) {
            let st = cp.pattern_stats(&p);
            assert_eq!((st.size, st.degree_sum, st.intra_weight), direct_stats(&g, &members(&g, &t, &p)), "{p:?}");
        }
    }
}

#[test]
fn matches_exhaustive_enumeration() {
    let mut r = common::rng(22);
    for case in 0..100 {
        let (g, t) = common::random_attributed_graph(&mut r, 12, 6);
        for measure in CommunityMeasure::ALL {
            let config = MiningConfig {
                measure,
                k: r.random_range(1..=8),
                min_size: r.random_range(1..=3),
                max_depth: r.random_range(1..=3),
                pruning: true,
            };
            let mined = mine_top_k(&g, &t, config).unwrap();
            let expected = brute_force_top_k(&g, &t, measure, config.k, config.min_size, config.max_depth);
            assert_eq!(pattern_keys(&mined.patterns), expected, "case {case} {config:?}");
            let unpruned = mine_top_k(&g, &t, MiningConfig { pruning: false, ..config }).unwrap();
            assert_eq!(unpruned.patterns, mined.patterns);
            assert!(mined.stats.evaluated <= unpruned.stats.evaluated);
            for p in &mined.patterns {
                let mem: Vec<String> = members(&g, &t, &p.selectors).into_iter().collect();
                assert_eq!(p.members, mem);
                assert!(p.members.len() >= config.min_size);
            }
        }
    }
}

#[test]
fn estimate_is_admissible() {
    let mut r = common::rng(23);
    for _ in 0..200 {
        let (g, t) = common::random_attributed_graph(&mut r, 10, 5);
        let totals = GraphTotals::of(&g);
        let patterns = all_patterns(&graph_selectors(&g, &t), 5);
        for measure in CommunityMeasure::ALL {
            for p in &patterns {
                let (size, d, e) = direct_stats(&g, &members(&g, &t, p));
                if size == 0 {
                    continue;
                }
                let bound = optimistic_estimate(
                    sinet_core::netstats::CommunityStats { size, degree_sum: d, intra_weight: e },
                    totals,
                    measure,
                );
                for refined in patterns.iter().filter(|q| p.iter().all(|s| q.contains(s))) {
                    let (rs, rd, re) = direct_stats(&g, &members(&g, &t, refined));
                    if let Some(quality) = oracle_quality(measure, g.node_count(), g.total_weight(), rs, rd, re) {
                        assert!(quality <= bound, "{measure}: {refined:?} beats bound of {p:?}");
                    }
                }
            }
        }
    }
}

#[test]
fn estimate_edge_cases() {
    let totals = GraphTotals { nodes: 10, total_weight: 5.0 };
    let stats = |e| sinet_core::netstats::CommunityStats { size: 3, degree_sum: 10.0, intra_weight: e };
    assert_eq!(optimistic_estimate(stats(5.0), totals, CommunityMeasure::ModularityLocal), 1.0);
    assert_eq!(optimistic_estimate(stats(0.0), totals, CommunityMeasure::ModularityLocal), 0.0);
    assert_eq!(optimistic_estimate(stats(0.0), totals, CommunityMeasure::Segregation), 1.0);
}

#[test]
fn anti_monotone_members() {
    let mut r = common::rng(24);
    let (g, t) = common::random_attributed_graph(&mut r, 12, 6);
    let patterns = all_patterns(&graph_selectors(&g, &t), 3);
    for p in &patterns {
        for q in patterns.iter().filter(|q| p.iter().all(|s| q.contains(s))) {
            assert!(members(&g, &t, q).is_subset(&members(&g, &t, p)));
        }
    }
}

#[test]
fn pruning_cuts_planted_search() {
    let (g, t) = planted_attribute_graph(25, PlantedAttributes::default());
    let pruned = mine_top_k(&g, &t, MiningConfig::default()).unwrap();
    let full = mine_top_k(&g, &t, MiningConfig { pruning: false, ..MiningConfig::default() }).unwrap();
    assert_eq!(pruned.patterns, full.patterns);
    assert!(pruned.stats.evaluated * 5 <= full.stats.evaluated, "{:?} vs {:?}", pruned.stats, full.stats);
    assert!(pruned.patterns[0].selectors[0].attribute == "group");
}

#[test]
fn invalid_configuration() {
    let (g, t) = two_cliques();
    for bad in [MiningConfig { k: 0, ..MiningConfig::default() }, MiningConfig { max_depth: 0, ..MiningConfig::default() }] {
        assert!(mine_top_k(&g, &t, bad).is_err());
    }
}
