//! Slow reference computations.
//!
//! Each function here recomputes a quantity from its definition, sharing as
//! little code as possible with the fast paths, so that tests can compare the
//! two. [`chromatic_number`] is the exception: it is the exact solver that
//! both the library and the tests rely on.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::interval_endpoint::IntervalRecord;
use crate::intersection::SetValuedFunction;
use crate::query::{FactTable, QueryExpr};
use crate::schema::CliqueTable;

/// Caps for the quadratic and exponential oracles.
pub const PAIRWISE_CAP: usize = 5000;
pub const SUBSET_CAP: usize = 16;
pub const TREE_LEVEL_CAP: u32 = 16;

/// Exact chromatic number by DSATUR branch and bound.
///
/// Starts from a greedy clique (lower bound) and a DSATUR coloring (upper
/// bound) and returns at once when they meet.
pub fn chromatic_number(adj: &[Vec<usize>], cap: usize) -> Result<u32> {
    let n = adj.len();
    if n == 0 {
        return Ok(0);
    }
    if n > cap {
        return Err(Error::TooLargeForExact { size: n, cap });
    }
    let lower = greedy_clique(adj);
    let upper = dsatur_greedy(adj);
    if lower == upper {
        return Ok(upper as u32);
    }
    let mut search = Search {
        adj,
        colors: vec![0; n],
        seen: vec![vec![0u32; n + 1]; n],
        saturation: vec![0; n],
        best: upper,
        lower,
    };
    search.branch(0, 0);
    Ok(search.best as u32)
}

fn greedy_clique(adj: &[Vec<usize>]) -> usize {
    let n = adj.len();
    let sets: Vec<BTreeSet<usize>> = adj.iter().map(|a| a.iter().copied().collect()).collect();
    let mut best = 1;
    for start in 0..n {
        let mut clique = vec![start];
        let mut candidates: Vec<usize> = adj[start].to_vec();
        candidates.sort_by_key(|&v| std::cmp::Reverse(adj[v].len()));
        for v in candidates {
            if clique.iter().all(|u| sets[v].contains(u)) {
                clique.push(v);
            }
        }
        best = best.max(clique.len());
    }
    best
}

fn dsatur_greedy(adj: &[Vec<usize>]) -> usize {
    let n = adj.len();
    let mut colors = vec![0usize; n];
    let mut neighbor_colors: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    let mut used = 0;
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| colors[v] == 0)
            .max_by_key(|&v| (neighbor_colors[v].len(), adj[v].len(), std::cmp::Reverse(v)))
            .expect("uncolored vertex");
        let c = (1..).find(|c| !neighbor_colors[v].contains(c)).expect("free color");
        colors[v] = c;
        used = used.max(c);
        for &w in &adj[v] {
            neighbor_colors[w].insert(c);
        }
    }
    used
}

struct Search<'a> {
    adj: &'a [Vec<usize>],
    colors: Vec<usize>,
    // seen[v][c]: colored neighbors of v with color c
    seen: Vec<Vec<u32>>,
    saturation: Vec<usize>,
    best: usize,
    lower: usize,
}

impl Search<'_> {
    fn branch(&mut self, colored: usize, used: usize) {
        if self.best == self.lower {
            return;
        }
        let n = self.adj.len();
        if colored == n {
            self.best = used;
            return;
        }
        let v = (0..n)
            .filter(|&v| self.colors[v] == 0)
            .max_by_key(|&v| (self.saturation[v], self.adj[v].len(), std::cmp::Reverse(v)))
            .expect("uncolored vertex");
        let limit = (used + 1).min(self.best - 1);
        for c in 1..=limit {
            if self.seen[v][c] > 0 {
                continue;
            }
            self.assign(v, c);
            self.branch(colored + 1, used.max(c));
            self.unassign(v, c);
            if self.best == self.lower {
                return;
            }
        }
    }

    fn assign(&mut self, v: usize, c: usize) {
        self.colors[v] = c;
        for &w in self.adj[v].iter() {
            if self.seen[w][c] == 0 {
                self.saturation[w] += 1;
            }
            self.seen[w][c] += 1;
        }
    }

    fn unassign(&mut self, v: usize, c: usize) {
        self.colors[v] = 0;
        for &w in self.adj[v].iter() {
            self.seen[w][c] -= 1;
            if self.seen[w][c] == 0 {
                self.saturation[w] -= 1;
            }
        }
    }
}

/// Edges of `Int(F)` by testing every pair of images for a common node.
pub fn oracle_intersection_edges(f: &SetValuedFunction) -> Result<BTreeSet<(usize, usize)>> {
    let m = f.entry_count();
    if m > PAIRWISE_CAP {
        return Err(Error::TooLargeForExact {
            size: m,
            cap: PAIRWISE_CAP,
        });
    }
    let images: Vec<BTreeSet<&str>> = (0..m).map(|e| f.image_names(e)).collect();
    let mut edges = BTreeSet::new();
    for u in 0..m {
        for v in u + 1..m {
            if !images[u].is_disjoint(&images[v]) {
                edges.insert((u, v));
            }
        }
    }
    Ok(edges)
}

/// `ind(H)` straight from the definition, over named vertex subsets.
pub fn oracle_degeneracy(vertices: &[String], edges: &[BTreeSet<String>]) -> Result<usize> {
    let n = vertices.len();
    if n > SUBSET_CAP {
        return Err(Error::TooLargeForExact { size: n, cap: SUBSET_CAP });
    }
    let mut best = 0;
    for mask in 1u32..(1 << n) {
        let s: BTreeSet<&String> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| &vertices[i]).collect();
        let restricted: BTreeSet<BTreeSet<&String>> = edges
            .iter()
            .map(|e| e.iter().filter(|v| s.contains(v)).collect::<BTreeSet<_>>())
            .filter(|r| r.len() >= 2)
            .collect();
        let min_degree = s
            .iter()
            .map(|v| restricted.iter().filter(|r| r.contains(v)).count())
            .min()
            .unwrap_or(0);
        best = best.max(min_degree);
    }
    Ok(best)
}

/// Descendants-and-self of every node, by breadth-first search over an edge
/// list.
pub fn oracle_down_sets(nodes: &[String], edges: &[(String, String)]) -> BTreeMap<String, BTreeSet<String>> {
    let mut out_edges: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (s, t) in edges {
        out_edges.entry(s).or_default().push(t);
    }
    nodes
        .iter()
        .map(|u| {
            let mut seen: BTreeSet<String> = BTreeSet::from([u.clone()]);
            let mut frontier = vec![u.as_str()];
            while let Some(v) = frontier.pop() {
                for &w in out_edges.get(v).map(Vec::as_slice).unwrap_or(&[]) {
                    if seen.insert(w.to_owned()) {
                        frontier.push(w);
                    }
                }
            }
            (u.clone(), seen)
        })
        .collect()
}

/// Inclusion-maximal down-sets, by comparing every pair.
pub fn oracle_maximal_down_sets(nodes: &[String], edges: &[(String, String)]) -> BTreeSet<BTreeSet<String>> {
    let sets: BTreeSet<BTreeSet<String>> = oracle_down_sets(nodes, edges).into_values().collect();
    sets.iter()
        .filter(|s| !sets.iter().any(|t| t.len() > s.len() && s.is_subset(t)))
        .cloned()
        .collect()
}

/// Intervals meeting `[a, b]`, by a linear scan.
pub fn oracle_interval_intersections(intervals: &[IntervalRecord], a: f64, b: f64) -> Vec<usize> {
    (0..intervals.len())
        .filter(|&j| intervals[j].x <= b && intervals[j].y >= a)
        .collect()
}

/// Tree intervals whose half-open dyadic extents overlap that of `k`,
/// compared as integers over the common denominator `2^(n−1)`.
pub fn oracle_tree_overlap(k: u64, levels: u32) -> Result<Vec<u64>> {
    if levels == 0 || levels > TREE_LEVEL_CAP {
        return Err(Error::OutOfRange(format!("oracle supports 1..={TREE_LEVEL_CAP} levels")));
    }
    let count = (1u64 << levels) - 1;
    if k == 0 || k > count {
        return Err(Error::OutOfRange(format!("interval {k} outside 1..={count}")));
    }
    let scaled = |j: u64| {
        let mut lvl = 0;
        while j >> (lvl + 1) > 0 {
            lvl += 1;
        }
        let width = 1u64 << (levels - 1 - lvl);
        let lo = (j - (1 << lvl)) * width;
        (lo, lo + width)
    };
    let (klo, khi) = scaled(k);
    Ok((1..=count)
        .filter(|&j| {
            let (lo, hi) = scaled(j);
            lo < khi && klo < hi
        })
        .collect())
}

/// Rids satisfying `q`, by reading each fact row's clique row directly.
/// Rows whose node has no clique row satisfy no atom.
pub fn full_scan_oracle(q: &QueryExpr, fact: &FactTable, clique: &CliqueTable) -> Vec<u32> {
    (0..fact.len() as u32)
        .filter(|&rid| {
            let row = clique.row_of(fact.acc(rid));
            scan_matches(q, &|column, value| match row {
                Some(r) if column >= 1 && column as usize <= clique.k() => {
                    clique.cell(r, column as usize) == Some(value)
                }
                _ => false,
            })
        })
        .collect()
}

fn scan_matches(q: &QueryExpr, cell_is: &dyn Fn(u32, &str) -> bool) -> bool {
    match q {
        QueryExpr::Atom { column, value } => cell_is(*column, value),
        QueryExpr::And(a, b) => scan_matches(a, cell_is) && scan_matches(b, cell_is),
        QueryExpr::Or(a, b) => scan_matches(a, cell_is) || scan_matches(b, cell_is),
        QueryExpr::Not(a) => !scan_matches(a, cell_is),
    }
}

/// Sum of measures over `rids`, widened to `i128`.
pub fn oracle_sum(rids: &[u32], fact: &FactTable) -> i128 {
    rids.iter().map(|&r| i128::from(fact.measure(r))).sum()
}
