//! Seeded sweep comparing every fast path against its oracle.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::digraph::{
    down_chromatic_bounds_exact, down_hypergraph, exact_down_chromatic, greedy_down_coloring, hypergraph_degeneracy,
    max_down_set_size, DegeneracyMode,
};
use crate::error::Result;
use crate::intersection::{build_intersection_graph, greedy_color, ColoringOrder};
use crate::interval_endpoint::{bucketed_schema, build_endpoint_schema};
use crate::interval_tree::{build_tree_schema, overlap_query, tree_function, TreeVariant};
use crate::oracle;
use crate::query::{aggregate_sum, build_index, evaluate, FactTable};
use crate::schema::{materialize, verify_schema};
use crate::synth::{self, SeedableRng};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckReport {
    pub name: &'static str,
    pub comparisons: u64,
    pub mismatches: u64,
    pub first_failure: Option<String>,
}

impl CheckReport {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            comparisons: 0,
            mismatches: 0,
            first_failure: None,
        }
    }

    fn check(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        self.comparisons += 1;
        if !ok {
            self.mismatches += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(detail());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.mismatches == 0
    }
}

/// Names accepted by [`run_check`].
pub const CHECKS: [&str; 7] = [
    "tree-schema",
    "intersection-graph",
    "down-sets",
    "down-coloring",
    "schema-duality",
    "intervals",
    "query-engine",
];

pub fn run_all(seed: u64) -> Result<Vec<CheckReport>> {
    CHECKS.iter().map(|name| run_check(name, seed)).collect()
}

pub fn run_check(name: &str, seed: u64) -> Result<CheckReport> {
    match name {
        "tree-schema" => tree_schema(),
        "intersection-graph" => intersection_graph(seed),
        "down-sets" => down_sets(seed),
        "down-coloring" => down_coloring(seed),
        "schema-duality" => schema_duality(seed),
        "intervals" => intervals(seed),
        "query-engine" => query_engine(seed),
        other => Err(crate::Error::OutOfRange(format!("unknown check `{other}`"))),
    }
}

fn tree_schema() -> Result<CheckReport> {
    let mut r = CheckReport::new("tree-schema");
    for n in 1..=10 {
        let t = build_tree_schema(n, TreeVariant::TableConsistent, n)?;
        if n <= 6 {
            for variant in [TreeVariant::TableConsistent, TreeVariant::Literal] {
                let tv = build_tree_schema(n, variant, n)?;
                let (f, c) = tree_function(n, variant)?;
                let v = verify_schema(&f, &tv, &c);
                r.check(v.valid, || format!("n={n} {variant:?}: {:?}", v.counterexample));
            }
        }
        for k in 1..(1u64 << n) {
            let got = overlap_query(k, &t)?;
            let want = oracle::oracle_tree_overlap(k, n)?;
            r.check(got == want, || format!("overlap({k}) at n={n}: {got:?} != {want:?}"));
        }
    }
    Ok(r)
}

fn intersection_graph(seed: u64) -> Result<CheckReport> {
    let mut r = CheckReport::new("intersection-graph");
    let mut rng = synth::rng(seed);
    for _ in 0..100 {
        let f = synth::random_function(&mut rng, 30, 40, 6);
        let g = build_intersection_graph(&f);
        let fast: BTreeSet<(usize, usize)> = g.edges().collect();
        let slow = oracle::oracle_intersection_edges(&f)?;
        r.check(fast == slow, || format!("{} vs {} edges", fast.len(), slow.len()));
    }
    Ok(r)
}

fn edge_names(g: &crate::digraph::AcyclicDigraph) -> (Vec<String>, Vec<(String, String)>) {
    let names = g.names().to_vec();
    let edges = g.edges().map(|(u, v)| (g.name(u).to_owned(), g.name(v).to_owned())).collect();
    (names, edges)
}

fn down_sets(seed: u64) -> Result<CheckReport> {
    let mut r = CheckReport::new("down-sets");
    let mut rng = synth::rng(seed ^ 0x5eed);
    for i in 0..100 {
        let n = 1 + i % 12;
        let g = synth::random_dag(&mut rng, n, 0.3);
        let (names, edges) = edge_names(&g);
        let closures = oracle::oracle_down_sets(&names, &edges);
        for (u, want) in &closures {
            let got = g.descendants_and_self(u)?;
            r.check(&got == want, || format!("D[{u}] differs"));
        }
        let h = down_hypergraph(&g);
        let fast: BTreeSet<BTreeSet<String>> = h
            .edges()
            .iter()
            .map(|e| e.iter().map(|&v| names[v].clone()).collect())
            .collect();
        let slow = oracle::oracle_maximal_down_sets(&names, &edges);
        r.check(fast == slow, || format!("maximal down-sets differ on {}", g.to_edge_list()));
        let deg = hypergraph_degeneracy(&h, DegeneracyMode::Exact, 16)?;
        let slow_edges: Vec<BTreeSet<String>> = slow.into_iter().collect();
        let want = oracle::oracle_degeneracy(&names, &slow_edges)?;
        r.check(deg.value == want, || format!("degeneracy {} != {want}", deg.value));
    }
    Ok(r)
}

fn down_coloring(seed: u64) -> Result<CheckReport> {
    let mut r = CheckReport::new("down-coloring");
    let mut rng = synth::rng(seed ^ 0xd0c0);
    for i in 0..60 {
        let n = 2 + i % 10;
        let g = synth::random_dag(&mut rng, n, 0.35);
        let bounds = down_chromatic_bounds_exact(&g, 16)?;
        let exact = exact_down_chromatic(&g, 20)? as usize;
        r.check(bounds.lower <= exact && exact <= bounds.upper, || {
            format!("chi_d {exact} outside {bounds:?} for {}", g.to_edge_list())
        });
        r.check(bounds.lower == max_down_set_size(&g)?, || "lower bound is not D".into());
        for order in ColoringOrder::ALL {
            let c = greedy_down_coloring(&g, order)?;
            r.check(c.is_valid(&g) && c.k as usize >= exact, || {
                format!("greedy {order} gave an invalid coloring")
            });
        }
    }
    Ok(r)
}

fn schema_duality(seed: u64) -> Result<CheckReport> {
    let mut r = CheckReport::new("schema-duality");
    let mut rng = synth::rng(seed ^ 0x5c4e);
    for _ in 0..50 {
        let f = synth::random_function(&mut rng, 25, 30, 8);
        let g = build_intersection_graph(&f);
        for order in ColoringOrder::ALL {
            let c = greedy_color(&g, order);
            let t = materialize(&f, &c, None)?;
            let v = verify_schema(&f, &t, &c);
            r.check(v.valid, || format!("{order}: {:?}", v.counterexample));
        }
    }
    Ok(r)
}

fn intervals(seed: u64) -> Result<CheckReport> {
    let mut r = CheckReport::new("intervals");
    let mut rng = synth::rng(seed ^ 0x1a7e);
    for _ in 0..5 {
        let ivs = synth::random_intervals(&mut rng, 200, 100.0);
        let s = build_endpoint_schema(&ivs)?;
        let b = bucketed_schema(&ivs)?;
        let v = verify_schema(&s.endpoint_function(), s.table(), &s.coloring());
        r.check(v.valid, || format!("endpoint table: {:?}", v.counterexample));
        for _ in 0..100 {
            use rand::Rng;
            let a: f64 = (rng.gen_range(-10.0..110.0f64) * 4.0).round() / 4.0;
            let len: f64 = (rng.gen_range(0.0..20.0f64) * 4.0).round() / 4.0;
            let want = oracle::oracle_interval_intersections(&ivs, a, a + len);
            let got = s.query(a, a + len)?;
            let disjoint = got.straddling.iter().all(|j| got.ending.binary_search(j).is_err());
            r.check(got.indices() == want && disjoint, || format!("query [{a}, {}]", a + len));
            r.check(b.query(a, a + len)? == want, || format!("bucketed query [{a}, {}]", a + len));
        }
    }
    Ok(r)
}

fn query_engine(seed: u64) -> Result<CheckReport> {
    use rand::Rng;
    let mut r = CheckReport::new("query-engine");
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x9e);
    let t = build_tree_schema(6, TreeVariant::TableConsistent, 6)?;
    let mut fact = FactTable::new();
    for _ in 0..5000 {
        let acc = if rng.gen_bool(0.02) {
            "missing".to_owned()
        } else {
            rng.gen_range(1..64u32).to_string()
        };
        fact.push(&acc, rng.gen_range(-1000..1000));
    }
    let idx = build_index(&fact, &t);
    for _ in 0..200 {
        let q = synth::random_query(&mut rng, &t, 4);
        let got = evaluate(&q, &idx)?.to_vec();
        let want = oracle::full_scan_oracle(&q, &fact, &t);
        r.check(got == want, || format!("rows differ for {q}"));
        let sum = aggregate_sum(&q, &idx, &fact)?;
        r.check(sum == oracle::oracle_sum(&want, &fact), || format!("sum differs for {q}"));
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_passes() {
        for report in run_all(7).unwrap() {
            assert!(report.passed(), "{report:?}");
            assert!(report.comparisons > 0);
        }
    }

    #[test]
    fn unknown_check() {
        assert!(run_check("nope", 1).is_err());
    }
}
