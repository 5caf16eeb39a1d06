//! Seeded generators for fixtures, property tests and benchmarks.
//!
//! Every random generator takes a [`ChaCha8Rng`] so outputs are stable
//! across platforms for a given seed.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::digraph::{AcyclicDigraph, DigraphBuilder};
use crate::interval_endpoint::IntervalRecord;
use crate::intersection::SetValuedFunction;
use crate::query::QueryExpr;
use crate::schema::CliqueTable;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Singletons `1..=m` plus a source `ab` with edges to `a` and `b` for every
/// pair `a < b`. With `m = 4` this is the 10-node fixture with `D = 3`.
pub fn pair_sources_digraph(m: usize) -> AcyclicDigraph {
    let mut b = DigraphBuilder::new();
    for a in 1..=m {
        b.add_node(&a.to_string());
    }
    for a in 1..=m {
        for c in a + 1..=m {
            let s = format!("{a}{c}");
            b.add_edge(&s, &a.to_string());
            b.add_edge(&s, &c.to_string());
        }
    }
    b.build().expect("pair sources are acyclic")
}

/// Heap-numbered complete binary tree with `2^depth − 1` nodes and edges
/// from each parent to its children: one source whose down-set is everything.
pub fn complete_binary_out_tree(depth: u32) -> AcyclicDigraph {
    binary_tree(depth, false)
}

/// The same tree with edges from child to parent: every leaf is a source and
/// each down-set is a root path of `depth` nodes.
pub fn complete_binary_in_tree(depth: u32) -> AcyclicDigraph {
    binary_tree(depth, true)
}

fn binary_tree(depth: u32, upward: bool) -> AcyclicDigraph {
    let mut b = DigraphBuilder::new();
    let count = (1u64 << depth) - 1;
    for k in 1..=count {
        b.add_node(&k.to_string());
    }
    for k in 2..=count {
        let (child, parent) = (k.to_string(), (k / 2).to_string());
        if upward {
            b.add_edge(&child, &parent);
        } else {
            b.add_edge(&parent, &child);
        }
    }
    b.build().expect("trees are acyclic")
}

/// Random DAG on `n` nodes `v0..`: a hidden random order, each forward pair
/// joined with probability `p`.
pub fn random_dag(rng: &mut ChaCha8Rng, n: usize, p: f64) -> AcyclicDigraph {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut b = DigraphBuilder::new();
    for v in 0..n {
        b.add_node(&format!("v{v}"));
    }
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(p) {
                b.add_edge(&format!("v{}", order[i]), &format!("v{}", order[j]));
            }
        }
    }
    b.build().expect("forward edges only")
}

/// Random rooted tree on `n` nodes with parent-to-child edges.
pub fn random_out_tree(rng: &mut ChaCha8Rng, n: usize) -> AcyclicDigraph {
    let mut b = DigraphBuilder::new();
    b.add_node("t0");
    for v in 1..n {
        let parent = rng.gen_range(0..v);
        b.add_edge(&format!("t{parent}"), &format!("t{v}"));
    }
    b.build().expect("trees are acyclic")
}

/// Random rooted tree on `n` nodes with child-to-parent edges.
pub fn random_in_tree(rng: &mut ChaCha8Rng, n: usize) -> AcyclicDigraph {
    random_out_tree(rng, n).reversed()
}

/// Random function with `entries` entries `e0..` over nodes `u0..u{nodes}`;
/// each image has up to `max_image` nodes and may be empty.
pub fn random_function(rng: &mut ChaCha8Rng, entries: usize, nodes: usize, max_image: usize) -> SetValuedFunction {
    let mut f = SetValuedFunction::new();
    for u in 0..nodes {
        f.add_node(&format!("u{u}"));
    }
    let pool: Vec<String> = (0..nodes).map(|u| format!("u{u}")).collect();
    for e in 0..entries {
        let size = rng.gen_range(0..=max_image.min(nodes));
        let image: Vec<&String> = pool.choose_multiple(rng, size).collect();
        f.add_entry(&format!("e{e}"), image).expect("fresh entry ids");
    }
    f
}

/// Intervals `0..count` on a grid of step `1/4` within `[0, span]`, with a
/// mix of zero-length, short and long intervals so endpoints repeat.
pub fn random_intervals(rng: &mut ChaCha8Rng, count: usize, span: f64) -> Vec<IntervalRecord> {
    let grid = |v: f64| (v * 4.0).round() / 4.0;
    (0..count)
        .map(|i| {
            let x = grid(rng.gen_range(0.0..span));
            let len = match rng.gen_range(0..10) {
                0 => 0.0,
                1..=6 => grid(rng.gen_range(0.0..span / 20.0)),
                _ => grid(rng.gen_range(0.0..span / 2.0)),
            };
            IntervalRecord::new(i.to_string(), x, x + len).expect("non-negative length")
        })
        .collect()
}

/// Random query over `clique`: atoms mostly name a label that occurs in the
/// column, occasionally a missing one.
pub fn random_query(rng: &mut ChaCha8Rng, clique: &CliqueTable, depth: u32) -> QueryExpr {
    if depth == 0 || rng.gen_bool(0.3) {
        let column = rng.gen_range(1..=clique.k().max(1));
        let present: Vec<&str> = (0..clique.row_count())
            .filter_map(|r| clique.cell(r, column))
            .collect();
        let value = match present.choose(rng) {
            Some(v) if rng.gen_bool(0.9) => v.to_string(),
            _ => "absent".to_owned(),
        };
        return QueryExpr::atom(column as u32, value);
    }
    match rng.gen_range(0..3) {
        0 => random_query(rng, clique, depth - 1).not(),
        1 => random_query(rng, clique, depth - 1).and(random_query(rng, clique, depth - 1)),
        _ => random_query(rng, clique, depth - 1).or(random_query(rng, clique, depth - 1)),
    }
}

/// A layered DAG shaped loosely like an ontology: `layers` levels, the first
/// holding `roots` nodes, with nodes `GO:0000001..` and edges from parents in
/// the previous layer (drawn from a local window) down to children.
pub fn layered_dag(rng: &mut ChaCha8Rng, nodes: usize, roots: usize, layers: usize, max_parents: usize) -> AcyclicDigraph {
    let roots = roots.clamp(1, nodes.max(1));
    let layers = layers.max(1);
    let mut b = DigraphBuilder::new();
    let name = |i: usize| format!("GO:{:07}", i + 1);
    let mut bounds = vec![0, roots];
    let rest = nodes.saturating_sub(roots);
    for l in 1..layers {
        let end = roots + rest * l / (layers - 1).max(1);
        bounds.push(end.min(nodes));
    }
    if *bounds.last().unwrap() < nodes {
        bounds.push(nodes);
    }
    for i in 0..nodes {
        b.add_node(&name(i));
    }
    for w in bounds.windows(3) {
        let (prev, cur) = ((w[0], w[1]), (w[1], w[2]));
        let prev_len = prev.1 - prev.0;
        if prev_len == 0 {
            continue;
        }
        for child in cur.0..cur.1 {
            // centre of the window tracks the child's relative position
            let rel = (child - cur.0) as f64 / (cur.1 - cur.0).max(1) as f64;
            let centre = prev.0 + (rel * prev_len as f64) as usize;
            let half = 4.max(prev_len / 50);
            let lo = centre.saturating_sub(half).max(prev.0);
            let hi = (centre + half).min(prev.1);
            let parents = rng.gen_range(1..=max_parents.max(1));
            for _ in 0..parents {
                let p = rng.gen_range(lo..hi.max(lo + 1));
                b.add_edge(&name(p), &name(child));
            }
        }
    }
    b.build().expect("edges go to later layers")
}
