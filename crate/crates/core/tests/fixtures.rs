use std::collections::BTreeSet;

use cliquedex::digraph::{
    down_chromatic_bounds, down_hypergraph, exact_down_chromatic, greedy_down_coloring, hypergraph_degeneracy,
    max_down_set_size, AcyclicDigraph, BoundRule, DegeneracyMode,
};
use cliquedex::intersection::{
    build_intersection_graph, clique_lower_bound, exact_chromatic, greedy_color, ColoringOrder,
};
use cliquedex::interval_endpoint::{bucketed_schema, build_endpoint_schema, IntervalRecord};
use cliquedex::interval_tree::{
    build_tree_schema, map_point_to_leaf, naive_overlap_function, overlap_query, tree_fact_query, tree_function,
    TreeEntry, TreeParams, TreeVariant,
};
use cliquedex::oracle;
use cliquedex::query::{aggregate_sum, build_index, evaluate, FactTable, QueryExpr};
use cliquedex::schema::{materialize, verify_schema};
use cliquedex::synth;
use cliquedex::DEFAULT_EXACT_CAP;

const FIXTURE_EDGES: &str = "12\t1\n12\t2\n13\t1\n13\t3\n14\t1\n14\t4\n23\t2\n23\t3\n24\t2\n24\t4\n34\t3\n34\t4\n";

fn fixture() -> AcyclicDigraph {
    AcyclicDigraph::parse_edge_list(FIXTURE_EDGES).unwrap()
}

fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

#[test]
fn fixture_closures() {
    let g = fixture();
    assert_eq!(g.node_count(), 10);
    assert_eq!(g.descendants_and_self("12").unwrap(), set(&["12", "1", "2"]));
    assert_eq!(g.ancestors_and_self("1").unwrap(), set(&["1", "12", "13", "14"]));
    let named = |g: &AcyclicDigraph| -> BTreeSet<(String, String)> {
        g.edges().map(|(u, v)| (g.name(u).to_owned(), g.name(v).to_owned())).collect()
    };
    assert_eq!(named(&g), named(&synth::pair_sources_digraph(4)));
}

#[test]
fn fixture_hypergraph() {
    let g = fixture();
    let h = down_hypergraph(&g);
    assert_eq!(h.edges().len(), 6);
    assert!(h.edges().iter().all(|e| e.len() == 3));
    let names = g.names().to_vec();
    let edges: Vec<(String, String)> = g.edges().map(|(u, v)| (names[u].clone(), names[v].clone())).collect();
    let oracle_edges = oracle::oracle_maximal_down_sets(&names, &edges);
    let ours: BTreeSet<BTreeSet<String>> = h
        .edges()
        .iter()
        .map(|e| e.iter().map(|&v| names[v].clone()).collect())
        .collect();
    assert_eq!(ours, oracle_edges);
    let slow: Vec<BTreeSet<String>> = oracle_edges.into_iter().collect();
    assert_eq!(oracle::oracle_degeneracy(&names, &slow).unwrap(), 3);
    let exact = hypergraph_degeneracy(&h, DegeneracyMode::Exact, 16).unwrap();
    assert_eq!((exact.value, exact.exact), (3, true));
    let peel = hypergraph_degeneracy(&h, DegeneracyMode::Peel, 16).unwrap();
    assert!(peel.value <= 3);
}

#[test]
fn fixture_coloring() {
    let g = fixture();
    assert_eq!(max_down_set_size(&g).unwrap(), 3);
    assert_eq!(exact_down_chromatic(&g, DEFAULT_EXACT_CAP).unwrap(), 4);
    let b = down_chromatic_bounds(&g, 16).unwrap();
    assert_eq!((b.lower, b.upper, b.rule), (3, 4, BoundRule::Degeneracy));
    let c = greedy_down_coloring(&g, ColoringOrder::SmallestLast).unwrap();
    assert!(c.is_valid(&g));
    assert_eq!(c.k, 4);
    // Int(A[·]) is the same graph, seen through the intersection module
    let conflicts = build_intersection_graph(&g.ancestor_function());
    assert_eq!(greedy_color(&conflicts, ColoringOrder::SmallestLast).k(), 4);
}

#[test]
fn descendant_intersection_graph() {
    let g = fixture();
    let f = g.descendant_function();
    let ig = build_intersection_graph(&f);
    let ix = |n: &str| f.entry_handle(n).unwrap();
    assert!(ig.is_adjacent(ix("12"), ix("13")));
    assert!(!ig.is_adjacent(ix("12"), ix("34")));
    let slow = oracle::oracle_intersection_edges(&f).unwrap();
    assert_eq!(ig.edges().collect::<BTreeSet<_>>(), slow);
}

#[test]
fn tree_shaped_digraphs() {
    // parent -> child: a single down-set holding all 7 nodes
    let out = synth::complete_binary_out_tree(3);
    assert_eq!(max_down_set_size(&out).unwrap(), 7);
    let b = down_chromatic_bounds(&out, 16).unwrap();
    assert_eq!((b.lower, b.upper), (7, 7));
    // child -> parent: down-sets are root paths
    let inward = synth::complete_binary_in_tree(4);
    let b = down_chromatic_bounds(&inward, 16).unwrap();
    assert_eq!((b.lower, b.upper, b.rule), (4, 4, BoundRule::Tight));
    let c = greedy_down_coloring(&synth::complete_binary_in_tree(3), ColoringOrder::SmallestLast).unwrap();
    assert_eq!(c.k, 3);
    assert_eq!(exact_down_chromatic(&synth::complete_binary_in_tree(3), 20).unwrap(), 3);
}

#[test]
fn two_disjoint_edges() {
    let g = AcyclicDigraph::from_edges([("a", "b"), ("c", "d")]).unwrap();
    assert_eq!(exact_down_chromatic(&g, 20).unwrap(), 2);
}

#[test]
fn tree_function_shape() {
    let (f, c) = tree_function(4, TreeVariant::TableConsistent).unwrap();
    let t = materialize(&f, &c, None).unwrap();
    // every interval lies in exactly one entry per color
    let per_node = (0..f.node_count())
        .map(|n| (0..f.entry_count()).filter(|&e| f.image(e).contains(&n)).count())
        .max()
        .unwrap();
    assert_eq!(per_node, 4);
    assert_eq!(clique_lower_bound(&f), 4);
    let golden = build_tree_schema(4, TreeVariant::TableConsistent, 24).unwrap();
    let rows: Vec<_> = (0..15).map(|r| t.row(t.row_of(&(r + 1).to_string()).unwrap()).collect::<Vec<_>>()).collect();
    let want: Vec<_> = (0..15).map(|r| golden.row(r).collect::<Vec<_>>()).collect();
    assert_eq!(rows, want);
    assert!(verify_schema(&f, &golden, &c).valid);
}

#[test]
fn tree_chromatic_identities() {
    for n in 2..=5 {
        let (f, c) = tree_function(n, TreeVariant::TableConsistent).unwrap();
        let g = build_intersection_graph(&f);
        assert!(c.is_proper(&g));
        assert_eq!(exact_chromatic(&g, 200).unwrap(), n);
    }
    for n in 2..=4 {
        let f = naive_overlap_function(n).unwrap();
        let g = build_intersection_graph(&f);
        assert_eq!(exact_chromatic(&g, 200).unwrap(), (1 << n) - 1);
    }
}

#[test]
fn tree_point_query() {
    assert_eq!(map_point_to_leaf(0.3, 4).unwrap(), 10);
    let t = build_tree_schema(4, TreeVariant::TableConsistent, 24).unwrap();
    let mut fact = FactTable::new();
    for m in 1..=9 {
        fact.push("10", m);
    }
    let idx = build_index(&fact, &t);
    assert_eq!(tree_fact_query(5, &idx).unwrap().to_vec(), (0..9).collect::<Vec<_>>());
    assert_eq!(overlap_query(8, &t).unwrap(), vec![1, 2, 4, 8]);
    let p = TreeParams::new(4).unwrap();
    let g = |pp, q| p.entry_members(TreeEntry::new(pp, q), TreeVariant::TableConsistent).unwrap();
    assert_eq!(g(2, 2), vec![2, 4, 5, 8, 9, 10, 11]);
}

#[test]
fn interval_examples() {
    let two = [IntervalRecord::new("a", 0.0, 2.0).unwrap(), IntervalRecord::new("b", 1.0, 3.0).unwrap()];
    let s = build_endpoint_schema(&two).unwrap();
    assert_eq!(s.entries(), &[0.0, 1.0, 2.0, 3.0]);
    let f = s.endpoint_function();
    assert_eq!(f.image_names(f.entry_handle("1").unwrap()), ["a", "b"].into_iter().collect());
    assert_eq!(clique_lower_bound(&f), 2);
    assert_eq!(s.k(), 2);
    assert_eq!(s.query_ids(1.0, 1.0).unwrap(), vec!["a", "b"]);

    let mut three = two.to_vec();
    three.push(IntervalRecord::new("c", 4.0, 5.0).unwrap());
    let s = build_endpoint_schema(&three).unwrap();
    assert_eq!(s.query_ids(1.5, 3.5).unwrap(), vec!["a", "b"]);

    let mut mixed = Vec::new();
    for i in 0..20 {
        let x = i as f64 * 37.0;
        mixed.push(IntervalRecord::new(format!("s{i}"), x, x + 1.0).unwrap());
        mixed.push(IntervalRecord::new(format!("l{i}"), x, x + 1000.0).unwrap());
    }
    let b = bucketed_schema(&mixed).unwrap();
    assert!(b.buckets().count() >= 2);
    for (a, bb) in [(0.0, 0.5), (500.0, 501.0), (1700.0, 2000.0)] {
        assert_eq!(b.query(a, bb).unwrap(), oracle::oracle_interval_intersections(&mixed, a, bb));
    }
}

#[test]
fn go_shaped_triple_query() {
    let mut rng = synth::rng(11);
    let dag = synth::layered_dag(&mut rng, 600, 3, 8, 3);
    let f = dag.descendant_function();
    let c = greedy_color(&build_intersection_graph(&f), ColoringOrder::SmallestLast);
    let t = materialize(&f, &c, None).unwrap();
    assert!(verify_schema(&f, &t, &c).valid);
    let mut fact = FactTable::new();
    use rand::Rng;
    for _ in 0..10_000 {
        let v = rng.gen_range(0..dag.node_count());
        fact.push(dag.name(v), rng.gen_range(0..100));
    }
    let idx = build_index(&fact, &t);
    // three ancestors of one deep node, as in c13 & c21 & c23
    let deep = (0..dag.node_count()).max_by_key(|&v| dag.ancestors(v).len()).unwrap();
    let anc = dag.ancestors(deep);
    assert!(anc.len() >= 3);
    let atoms = anc[..3].iter().map(|&e| QueryExpr::atom(c.color(e), dag.name(e)));
    let q = QueryExpr::all_of(atoms).unwrap();
    let want = oracle::full_scan_oracle(&q, &fact, &t);
    assert_eq!(evaluate(&q, &idx).unwrap().to_vec(), want);
    let single = QueryExpr::atom(c.color(anc[0]), dag.name(anc[0]));
    let rows = oracle::full_scan_oracle(&single, &fact, &t);
    assert_eq!(aggregate_sum(&single, &idx, &fact).unwrap(), oracle::oracle_sum(&rows, &fact));
}

#[test]
fn group_counts_match_postings() {
    let t = build_tree_schema(4, TreeVariant::TableConsistent, 24).unwrap();
    let mut rng = synth::rng(2);
    let mut fact = FactTable::new();
    use rand::Rng;
    for _ in 0..10_000 {
        fact.push(&rng.gen_range(1..16u32).to_string(), 1);
    }
    let idx = build_index(&fact, &t);
    for (col, label, posting) in idx.postings() {
        let scan = (0..fact.len() as u32)
            .filter(|&rid| {
                let row = t.row_of(fact.acc(rid)).unwrap();
                t.cell(row, col as usize) == Some(label)
            })
            .count();
        assert_eq!(posting.len() as usize, scan, "c{col}={label}");
    }
}
