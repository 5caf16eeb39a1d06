//! Acyclic digraphs and the down-coloring machinery built on them.
//!
//! `D[u]` is the descendants-and-self set of `u` and `A[u]` the
//! ancestors-and-self set. A down-coloring gives distinct colors to any two
//! nodes with a common ancestor, which is the same as a proper coloring of
//! the intersection graph of `u ↦ A[u]`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::intersection::{build_intersection_graph, greedy_color, ColoringOrder, SetValuedFunction};
use crate::oracle;

#[derive(Debug, Clone)]
pub struct AcyclicDigraph {
    names: Vec<String>,
    index: HashMap<String, usize>,
    out: Vec<Vec<usize>>,
    inc: Vec<Vec<usize>>,
    topo: Vec<usize>,
    closure: Option<Vec<Vec<usize>>>,
}

/// Collects nodes and edges, then checks acyclicity in [`build`](Self::build).
#[derive(Debug, Default, Clone)]
pub struct DigraphBuilder {
    names: Vec<String>,
    index: HashMap<String, usize>,
    edges: BTreeSet<(usize, usize)>,
}

impl DigraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, name: &str) -> usize {
        if let Some(&ix) = self.index.get(name) {
            return ix;
        }
        let ix = self.names.len();
        self.names.push(name.to_owned());
        self.index.insert(name.to_owned(), ix);
        ix
    }

    /// Adds `source -> target`; repeated edges collapse into one.
    pub fn add_edge(&mut self, source: &str, target: &str) {
        let s = self.add_node(source);
        let t = self.add_node(target);
        self.edges.insert((s, t));
    }

    pub fn build(self) -> Result<AcyclicDigraph> {
        let n = self.names.len();
        let mut out = vec![Vec::new(); n];
        let mut inc = vec![Vec::new(); n];
        for &(s, t) in &self.edges {
            out[s].push(t);
            inc[t].push(s);
        }

        // Kahn's algorithm; leftover nodes all sit on or behind a cycle.
        let mut indeg: Vec<usize> = inc.iter().map(Vec::len).collect();
        let mut stack: Vec<usize> = (0..n).rev().filter(|&v| indeg[v] == 0).collect();
        let mut topo = Vec::with_capacity(n);
        while let Some(v) = stack.pop() {
            topo.push(v);
            for &w in out[v].iter().rev() {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    stack.push(w);
                }
            }
        }
        if topo.len() < n {
            let witness = cycle_witness(&inc, &indeg)
                .into_iter()
                .map(|v| self.names[v].clone())
                .collect();
            return Err(Error::CycleDetected { witness });
        }

        Ok(AcyclicDigraph {
            names: self.names,
            index: self.index,
            out,
            inc,
            topo,
            closure: None,
        })
    }
}

// Every node with positive residual in-degree has a predecessor with the
// same property, so walking predecessors must revisit a node.
fn cycle_witness(inc: &[Vec<usize>], residual_indeg: &[usize]) -> Vec<usize> {
    let start = residual_indeg.iter().position(|&d| d > 0).expect("a node remains on a cycle");
    let mut seen_at = HashMap::new();
    let mut walk = Vec::new();
    let mut v = start;
    loop {
        if let Some(&pos) = seen_at.get(&v) {
            let mut cycle: Vec<usize> = walk[pos..].to_vec();
            cycle.reverse();
            cycle.push(cycle[0]);
            return cycle;
        }
        seen_at.insert(v, walk.len());
        walk.push(v);
        v = *inc[v]
            .iter()
            .find(|&&p| residual_indeg[p] > 0)
            .expect("residual node has a residual predecessor");
    }
}

impl AcyclicDigraph {
    /// Builds a digraph from `(source, target)` pairs.
    pub fn from_edges<I, S, T>(edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, T)>,
        S: AsRef<str>,
        T: AsRef<str>,
    {
        let mut b = DigraphBuilder::new();
        for (s, t) in edges {
            b.add_edge(s.as_ref(), t.as_ref());
        }
        b.build()
    }

    /// Parses the tab separated edge list format: `source<TAB>target` per
    /// line, `#` comments, and `node<TAB>` for isolated nodes.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut b = DigraphBuilder::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((source, target)) = line.split_once('\t') else {
                return Err(Error::MalformedCsv {
                    line: i as u64 + 1,
                    reason: "expected `source<TAB>target`".into(),
                });
            };
            if source.is_empty() || target.contains('\t') {
                return Err(Error::MalformedCsv {
                    line: i as u64 + 1,
                    reason: "expected exactly two tab separated fields with a non-empty source".into(),
                });
            }
            if target.is_empty() {
                b.add_node(source);
            } else {
                b.add_edge(source, target);
            }
        }
        b.build()
    }

    /// Writes the edge list with lines sorted by node name, so equal graphs
    /// give equal text.
    pub fn to_edge_list(&self) -> String {
        let mut lines: Vec<(&str, &str)> = Vec::with_capacity(self.edge_count());
        for v in 0..self.node_count() {
            if self.out[v].is_empty() && self.inc[v].is_empty() {
                lines.push((&self.names[v], ""));
            }
            for &w in &self.out[v] {
                lines.push((&self.names[v], &self.names[w]));
            }
        }
        lines.sort_unstable();
        lines.iter().map(|(s, t)| format!("{s}\t{t}\n")).collect()
    }

    /// Precomputes every descendants-and-self set. Only sensible for small
    /// graphs: memory is the sum of all closure sizes.
    pub fn with_precomputed_closure(mut self) -> Self {
        let mut closure: Vec<Vec<usize>> = vec![Vec::new(); self.node_count()];
        for &v in self.topo.iter().rev() {
            let mut set = vec![v];
            for &w in &self.out[v] {
                set.extend_from_slice(&closure[w]);
            }
            set.sort_unstable();
            set.dedup();
            closure[v] = set;
        }
        self.closure = Some(closure);
        self
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.out.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, v: usize) -> &str {
        &self.names[v]
    }

    pub fn handle(&self, name: &str) -> Result<usize> {
        self.index.get(name).copied().ok_or_else(|| Error::UnknownNode(name.to_owned()))
    }

    pub fn successors(&self, v: usize) -> &[usize] {
        &self.out[v]
    }

    pub fn predecessors(&self, v: usize) -> &[usize] {
        &self.inc[v]
    }

    pub fn topological_order(&self) -> &[usize] {
        &self.topo
    }

    /// Nodes without incoming edges.
    pub fn sources(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.node_count()).filter(|&v| self.inc[v].is_empty())
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.out.iter().enumerate().flat_map(|(s, ts)| ts.iter().map(move |&t| (s, t)))
    }

    /// Sorted handles of `D[v]`.
    pub fn descendants(&self, v: usize) -> Vec<usize> {
        if let Some(closure) = &self.closure {
            return closure[v].clone();
        }
        reach(&self.out, v)
    }

    /// Sorted handles of `A[v]`.
    pub fn ancestors(&self, v: usize) -> Vec<usize> {
        reach(&self.inc, v)
    }

    pub fn descendants_and_self(&self, u: &str) -> Result<BTreeSet<String>> {
        let v = self.handle(u)?;
        Ok(self.descendants(v).into_iter().map(|w| self.names[w].clone()).collect())
    }

    pub fn ancestors_and_self(&self, u: &str) -> Result<BTreeSet<String>> {
        let v = self.handle(u)?;
        Ok(self.ancestors(v).into_iter().map(|w| self.names[w].clone()).collect())
    }

    /// The same digraph with every edge reversed.
    pub fn reversed(&self) -> AcyclicDigraph {
        let mut topo = self.topo.clone();
        topo.reverse();
        AcyclicDigraph {
            names: self.names.clone(),
            index: self.index.clone(),
            out: self.inc.clone(),
            inc: self.out.clone(),
            topo,
            closure: None,
        }
    }

    /// `e ↦ D[e]` over all nodes: the function indexed by `Clique(D[·])`.
    pub fn descendant_function(&self) -> SetValuedFunction {
        self.closure_function(|v| self.descendants(v))
    }

    /// `e ↦ A[e]`; its intersection graph is the down-coloring conflict graph.
    pub fn ancestor_function(&self) -> SetValuedFunction {
        self.closure_function(|v| self.ancestors(v))
    }

    fn closure_function(&self, image: impl Fn(usize) -> Vec<usize>) -> SetValuedFunction {
        let mut f = SetValuedFunction::new();
        for name in &self.names {
            f.add_node(name);
        }
        for v in 0..self.node_count() {
            let members = image(v);
            f.add_entry(&self.names[v], members.iter().map(|&w| self.names[w].as_str()))
                .expect("node names are unique");
        }
        f
    }
}

fn reach(adj: &[Vec<usize>], start: usize) -> Vec<usize> {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![start];
    seen[start] = true;
    let mut found = Vec::new();
    while let Some(v) = stack.pop() {
        found.push(v);
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    found.sort_unstable();
    found
}

/// Hypergraph whose edges are the inclusion-maximal sets `D[u]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DownHypergraph {
    labels: Vec<String>,
    edges: Vec<Vec<usize>>,
}

impl DownHypergraph {
    /// A hypergraph from explicit edges; used for fixtures that are not
    /// derived from a digraph.
    pub fn from_edges(labels: Vec<String>, edges: Vec<Vec<usize>>) -> Self {
        let mut edges: Vec<Vec<usize>> = edges
            .into_iter()
            .map(|mut e| {
                e.sort_unstable();
                e.dedup();
                e
            })
            .collect();
        edges.sort();
        edges.dedup();
        Self { labels, edges }
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn edges(&self) -> &[Vec<usize>] {
        &self.edges
    }
}

/// The down-hypergraph of `g`.
///
/// `D[u] ⊊ D[v]` whenever `v` reaches `u`, and `D[s]` for a source `s` is
/// contained in no other set since nothing else reaches `s`; so the maximal
/// sets are exactly the closures of the sources, pairwise distinct.
pub fn down_hypergraph(g: &AcyclicDigraph) -> DownHypergraph {
    let edges = g.sources().map(|s| g.descendants(s)).collect();
    DownHypergraph::from_edges(g.names.clone(), edges)
}

/// `D(G)`: the largest descendants-and-self set.
pub fn max_down_set_size(g: &AcyclicDigraph) -> Result<usize> {
    if g.is_empty() {
        return Err(Error::EmptyDigraph);
    }
    Ok(g.sources().map(|s| g.descendants(s).len()).max().unwrap_or(1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DegeneracyMode {
    /// Enumerate every vertex subset.
    Exact,
    /// Repeated minimum-degree removal; a lower bound on the exact value.
    Peel,
}

impl FromStr for DegeneracyMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "exact" => Ok(Self::Exact),
            "peel" => Ok(Self::Peel),
            other => Err(format!("unknown degeneracy mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Degeneracy {
    pub value: usize,
    /// False when the value came from peeling and only bounds `ind(H)` from below.
    pub exact: bool,
}

impl fmt::Display for Degeneracy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exact {
            write!(f, "{}", self.value)
        } else {
            write!(f, "{} (estimate)", self.value)
        }
    }
}

/// `ind(H) = max_S δ(H[S])`, where `H[S]` keeps the distinct restrictions of
/// edges to `S` that have at least two vertices, and `δ` of an edgeless
/// `H[S]` is 0.
pub fn hypergraph_degeneracy(h: &DownHypergraph, mode: DegeneracyMode, cap: usize) -> Result<Degeneracy> {
    match mode {
        DegeneracyMode::Exact => exact_degeneracy(h, cap).map(|value| Degeneracy { value, exact: true }),
        DegeneracyMode::Peel => Ok(Degeneracy {
            value: peel_degeneracy(h),
            exact: false,
        }),
    }
}

fn exact_degeneracy(h: &DownHypergraph, cap: usize) -> Result<usize> {
    let n = h.vertex_count();
    if n > cap.min(30) {
        return Err(Error::TooLargeForExact { size: n, cap });
    }
    let masks: Vec<u32> = h
        .edges
        .iter()
        .map(|e| e.iter().fold(0u32, |m, &v| m | (1 << v)))
        .collect();
    let mut best = 0;
    let mut restricted = Vec::with_capacity(masks.len());
    for subset in 1u32..(1u32 << n) {
        restricted.clear();
        restricted.extend(masks.iter().map(|m| m & subset).filter(|r| r.count_ones() >= 2));
        restricted.sort_unstable();
        restricted.dedup();
        let mut min_degree = usize::MAX;
        let mut rest = subset;
        while rest != 0 {
            let bit = rest & rest.wrapping_neg();
            rest ^= bit;
            let d = restricted.iter().filter(|&&r| r & bit != 0).count();
            min_degree = min_degree.min(d);
            if min_degree <= best {
                break;
            }
        }
        best = best.max(min_degree);
    }
    Ok(best)
}

fn peel_degeneracy(h: &DownHypergraph) -> usize {
    let n = h.vertex_count();
    let mut alive = vec![true; n];
    let mut remaining = n;
    let mut best = 0;
    while remaining > 0 {
        let mut restricted: Vec<Vec<usize>> = h
            .edges
            .iter()
            .map(|e| e.iter().copied().filter(|&v| alive[v]).collect::<Vec<_>>())
            .filter(|r| r.len() >= 2)
            .collect();
        restricted.sort_unstable();
        restricted.dedup();
        let mut degree = vec![0usize; n];
        for r in &restricted {
            for &v in r {
                degree[v] += 1;
            }
        }
        let (victim, min_degree) = (0..n)
            .filter(|&v| alive[v])
            .map(|v| (v, degree[v]))
            .min_by_key(|&(v, d)| (d, v))
            .expect("a vertex remains");
        best = best.max(min_degree);
        alive[victim] = false;
        remaining -= 1;
    }
    best
}

/// Which part of the bound produced `upper`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundRule {
    /// No edges: one color.
    Edgeless,
    /// `ind(H) = 1` or `D(G) = 2`: `χ_d = D(G)`.
    Tight,
    /// `χ_d ≤ ind(H)·(D(G) − 2) + 1`.
    Degeneracy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ChromaticBounds {
    pub lower: usize,
    pub upper: usize,
    pub max_down_set: usize,
    pub degeneracy: Degeneracy,
    pub rule: BoundRule,
    /// The degeneracy formula fell below `lower` and was raised to it.
    pub clamped: bool,
}

impl ChromaticBounds {
    /// True when `upper` rests on a peeled degeneracy estimate.
    pub fn is_estimate(&self) -> bool {
        !self.degeneracy.exact
    }
}

/// Bounds on the down-chromatic number. Exact degeneracy is used up to
/// `degeneracy_cap` vertices, a peeled estimate beyond (flagged).
pub fn down_chromatic_bounds(g: &AcyclicDigraph, degeneracy_cap: usize) -> Result<ChromaticBounds> {
    let h = down_hypergraph(g);
    let mode = if g.node_count() <= degeneracy_cap {
        DegeneracyMode::Exact
    } else {
        DegeneracyMode::Peel
    };
    let degeneracy = hypergraph_degeneracy(&h, mode, degeneracy_cap)?;
    bounds_from(g, degeneracy)
}

/// Like [`down_chromatic_bounds`] but fails instead of estimating.
pub fn down_chromatic_bounds_exact(g: &AcyclicDigraph, degeneracy_cap: usize) -> Result<ChromaticBounds> {
    let h = down_hypergraph(g);
    let degeneracy = hypergraph_degeneracy(&h, DegeneracyMode::Exact, degeneracy_cap)?;
    bounds_from(g, degeneracy)
}

fn bounds_from(g: &AcyclicDigraph, degeneracy: Degeneracy) -> Result<ChromaticBounds> {
    let d = max_down_set_size(g)?;
    if g.edge_count() == 0 {
        return Ok(ChromaticBounds {
            lower: 1,
            upper: 1,
            max_down_set: d,
            degeneracy,
            rule: BoundRule::Edgeless,
            clamped: false,
        });
    }
    if degeneracy.value <= 1 || d == 2 {
        return Ok(ChromaticBounds {
            lower: d,
            upper: d,
            max_down_set: d,
            degeneracy,
            rule: BoundRule::Tight,
            clamped: false,
        });
    }
    let formula = degeneracy.value * (d - 2) + 1;
    Ok(ChromaticBounds {
        lower: d,
        upper: formula.max(d),
        max_down_set: d,
        degeneracy,
        rule: BoundRule::Degeneracy,
        clamped: formula < d,
    })
}

/// Colors `1..=k` by node handle such that nodes sharing an ancestor differ.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DownColoring {
    pub colors: Vec<u32>,
    pub k: u32,
}

impl DownColoring {
    /// Direct check: within every `D[u]` all colors are pairwise distinct.
    pub fn is_valid(&self, g: &AcyclicDigraph) -> bool {
        if self.colors.len() != g.node_count() {
            return false;
        }
        (0..g.node_count()).all(|u| {
            let mut seen = BTreeSet::new();
            g.descendants(u).into_iter().all(|v| seen.insert(self.colors[v]))
        })
    }
}

/// Greedy down-coloring: greedy proper coloring of `Int(A[·])`.
pub fn greedy_down_coloring(g: &AcyclicDigraph, order: ColoringOrder) -> Result<DownColoring> {
    if g.is_empty() {
        return Err(Error::EmptyDigraph);
    }
    let conflicts = build_intersection_graph(&g.ancestor_function());
    let coloring = greedy_color(&conflicts, order);
    Ok(DownColoring {
        k: coloring.k(),
        colors: coloring.colors().to_vec(),
    })
}

/// Exact down-chromatic number on the pairwise conflict graph
/// (`u ~ v` iff `A[u] ∩ A[v] ≠ ∅`).
pub fn exact_down_chromatic(g: &AcyclicDigraph, cap: usize) -> Result<u32> {
    let n = g.node_count();
    if n > cap {
        return Err(Error::TooLargeForExact { size: n, cap });
    }
    let ancestors: Vec<BTreeSet<usize>> = (0..n).map(|v| g.ancestors(v).into_iter().collect()).collect();
    let mut adj = vec![Vec::new(); n];
    for u in 0..n {
        for v in u + 1..n {
            if !ancestors[u].is_disjoint(&ancestors[v]) {
                adj[u].push(v);
                adj[v].push(u);
            }
        }
    }
    oracle::chromatic_number(&adj, cap)
}
