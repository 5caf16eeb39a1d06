//! Set-valued functions, their intersection graphs and proper colorings.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle;

/// A map from data entries to sets of nodes over a shared node domain.
///
/// Entries and nodes are opaque strings externally and dense handles
/// internally. Images are stored sorted and deduplicated.
#[derive(Debug, Clone, Default)]
pub struct SetValuedFunction {
    entries: Vec<String>,
    entry_index: HashMap<String, usize>,
    // Text written into a clique table cell for the entry; `None` means the id.
    cell_labels: Vec<Option<String>>,
    nodes: Vec<String>,
    node_index: HashMap<String, usize>,
    images: Vec<Vec<usize>>,
}

impl SetValuedFunction {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a function from `(entry, node)` membership pairs.
    pub fn from_pairs<I, E, N>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (E, N)>,
        E: AsRef<str>,
        N: AsRef<str>,
    {
        let mut f = Self::new();
        for (e, n) in pairs {
            f.add_membership(e.as_ref(), n.as_ref());
        }
        f
    }

    /// Declares a domain node, returning its handle.
    pub fn add_node(&mut self, name: &str) -> usize {
        if let Some(&ix) = self.node_index.get(name) {
            return ix;
        }
        let ix = self.nodes.len();
        self.nodes.push(name.to_owned());
        self.node_index.insert(name.to_owned(), ix);
        ix
    }

    /// Adds a new entry with the given image. Fails if the entry exists.
    pub fn add_entry<I, N>(&mut self, id: &str, image: I) -> Result<usize>
    where
        I: IntoIterator<Item = N>,
        N: AsRef<str>,
    {
        self.add_entry_inner(id, None, image)
    }

    /// Like [`add_entry`](Self::add_entry), with a cell label that differs
    /// from the entry id. Used when the color column already disambiguates
    /// entries, e.g. tree entries `(p, q)` stored as `p` in column `q`.
    pub fn add_labeled_entry<I, N>(&mut self, id: &str, label: &str, image: I) -> Result<usize>
    where
        I: IntoIterator<Item = N>,
        N: AsRef<str>,
    {
        self.add_entry_inner(id, Some(label.to_owned()), image)
    }

    fn add_entry_inner<I, N>(&mut self, id: &str, label: Option<String>, image: I) -> Result<usize>
    where
        I: IntoIterator<Item = N>,
        N: AsRef<str>,
    {
        if self.entry_index.contains_key(id) {
            return Err(Error::DuplicateEntry(id.to_owned()));
        }
        let ix = self.push_entry(id, label);
        let mut nodes: Vec<usize> = image.into_iter().map(|n| self.add_node(n.as_ref())).collect();
        nodes.sort_unstable();
        nodes.dedup();
        self.images[ix] = nodes;
        Ok(ix)
    }

    fn push_entry(&mut self, id: &str, label: Option<String>) -> usize {
        let ix = self.entries.len();
        self.entries.push(id.to_owned());
        self.entry_index.insert(id.to_owned(), ix);
        self.cell_labels.push(label);
        self.images.push(Vec::new());
        ix
    }

    /// Records `node ∈ F(entry)`, creating either side on first sight.
    pub fn add_membership(&mut self, entry: &str, node: &str) {
        let e = match self.entry_index.get(entry) {
            Some(&e) => e,
            None => self.push_entry(entry, None),
        };
        let n = self.add_node(node);
        let image = &mut self.images[e];
        if let Err(pos) = image.binary_search(&n) {
            image.insert(pos, n);
        }
    }

    pub fn entry_count(&self) -> usize {
        self.entries.len()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn entries(&self) -> &[String] {
        &self.entries
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn entry(&self, ix: usize) -> &str {
        &self.entries[ix]
    }

    pub fn node(&self, ix: usize) -> &str {
        &self.nodes[ix]
    }

    pub fn entry_handle(&self, id: &str) -> Option<usize> {
        self.entry_index.get(id).copied()
    }

    pub fn node_handle(&self, name: &str) -> Option<usize> {
        self.node_index.get(name).copied()
    }

    pub fn cell_label(&self, ix: usize) -> &str {
        self.cell_labels[ix].as_deref().unwrap_or(&self.entries[ix])
    }

    /// Sorted node handles of `F(entry)`.
    pub fn image(&self, ix: usize) -> &[usize] {
        &self.images[ix]
    }

    pub fn image_names(&self, ix: usize) -> BTreeSet<&str> {
        self.images[ix].iter().map(|&n| self.nodes[n].as_str()).collect()
    }

    /// For every node, the ascending list of entries whose image contains it.
    pub fn inverted_index(&self) -> Vec<Vec<usize>> {
        let mut inv = vec![Vec::new(); self.nodes.len()];
        for (e, image) in self.images.iter().enumerate() {
            for &n in image {
                inv[n].push(e);
            }
        }
        inv
    }

    /// Reads `entry,node` membership pairs, one per line. The header
    /// `entry,node` is optional.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
        let mut f = Self::new();
        for (i, record) in rdr.records().enumerate() {
            let record = record?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            if record.len() != 2 {
                return Err(Error::InconsistentArity {
                    line,
                    expected: 2,
                    found: record.len(),
                });
            }
            if i == 0 && &record[0] == "entry" && &record[1] == "node" {
                continue;
            }
            if record[0].is_empty() || record[1].is_empty() {
                return Err(Error::MalformedCsv {
                    line,
                    reason: "entry and node must be non-empty".into(),
                });
            }
            f.add_membership(&record[0], &record[1]);
        }
        Ok(f)
    }

    /// Writes `entry,node` pairs with a header. Entries with an empty image
    /// have no line and do not survive a round trip.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["entry", "node"])?;
        for (e, image) in self.images.iter().enumerate() {
            for &n in image {
                w.write_record([&self.entries[e], &self.nodes[n]])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Entries as vertices; two entries are adjacent iff their images meet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntersectionGraph {
    labels: Vec<String>,
    adj: Vec<Vec<usize>>,
}

impl IntersectionGraph {
    /// Builds a graph from explicit edges. Self loops are dropped and
    /// duplicate edges merged.
    pub fn from_edges(labels: Vec<String>, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut adj = vec![Vec::new(); labels.len()];
        for (u, v) in edges {
            if u != v {
                adj[u].push(v);
                adj[v].push(u);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Self { labels, adj }
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn is_adjacent(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    pub fn adjacency(&self) -> &[Vec<usize>] {
        &self.adj
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }
}

/// Builds `Int(F)` through the inverted index node -> entries: every node
/// contributes a clique over the entries containing it.
pub fn build_intersection_graph(f: &SetValuedFunction) -> IntersectionGraph {
    let mut adj = vec![Vec::new(); f.entry_count()];
    for members in f.inverted_index() {
        for (i, &u) in members.iter().enumerate() {
            for &v in &members[i + 1..] {
                adj[u].push(v);
                adj[v].push(u);
            }
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    IntersectionGraph {
        labels: f.entries().to_vec(),
        adj,
    }
}

/// Vertex order used by greedy coloring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ColoringOrder {
    Input,
    LargestFirst,
    #[default]
    SmallestLast,
}

impl ColoringOrder {
    pub const ALL: [ColoringOrder; 3] = [
        ColoringOrder::Input,
        ColoringOrder::LargestFirst,
        ColoringOrder::SmallestLast,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ColoringOrder::Input => "input",
            ColoringOrder::LargestFirst => "largest-first",
            ColoringOrder::SmallestLast => "smallest-last",
        }
    }
}

impl fmt::Display for ColoringOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ColoringOrder {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "input" => Ok(ColoringOrder::Input),
            "largest-first" => Ok(ColoringOrder::LargestFirst),
            "smallest-last" => Ok(ColoringOrder::SmallestLast),
            other => Err(format!(
                "unknown coloring order `{other}` (expected input, largest-first or smallest-last)"
            )),
        }
    }
}

/// Colors `1..=k` assigned to entries by handle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryColoring {
    colors: Vec<u32>,
    k: u32,
}

impl EntryColoring {
    /// Wraps a color vector. Colors must be positive; `k` is the largest.
    pub fn new(colors: Vec<u32>) -> Result<Self> {
        if let Some(pos) = colors.iter().position(|&c| c == 0) {
            return Err(Error::ColoringMismatch(format!("entry #{pos} has color 0; colors start at 1")));
        }
        let k = colors.iter().copied().max().unwrap_or(0);
        Ok(Self { colors, k })
    }

    /// Declares `k` columns explicitly, which may exceed the largest color used.
    pub fn with_k(colors: Vec<u32>, k: u32) -> Result<Self> {
        let mut c = Self::new(colors)?;
        if c.k > k {
            return Err(Error::ColoringMismatch(format!("color {} exceeds k = {k}", c.k)));
        }
        c.k = k;
        Ok(c)
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    pub fn color(&self, entry: usize) -> u32 {
        self.colors[entry]
    }

    pub fn colors(&self) -> &[u32] {
        &self.colors
    }

    /// First edge whose endpoints share a color, if any.
    pub fn conflict(&self, g: &IntersectionGraph) -> Option<(usize, usize)> {
        g.edges().find(|&(u, v)| self.colors[u] == self.colors[v])
    }

    pub fn is_proper(&self, g: &IntersectionGraph) -> bool {
        self.colors.len() == g.vertex_count() && self.conflict(g).is_none()
    }

    /// Renumbers colors to `1..=k'` removing unused ones, preserving order.
    pub fn compact(&self) -> Self {
        let used: BTreeSet<u32> = self.colors.iter().copied().collect();
        let remap: HashMap<u32, u32> = used.iter().enumerate().map(|(i, &c)| (c, i as u32 + 1)).collect();
        let colors: Vec<u32> = self.colors.iter().map(|c| remap[c]).collect();
        Self {
            k: used.len() as u32,
            colors,
        }
    }
}

/// Rank of each vertex in lexicographic label order, the greedy tie-break.
fn label_ranks(labels: &[String]) -> Vec<usize> {
    let mut by_label: Vec<usize> = (0..labels.len()).collect();
    by_label.sort_by(|&a, &b| labels[a].cmp(&labels[b]).then(a.cmp(&b)));
    let mut rank = vec![0; labels.len()];
    for (r, v) in by_label.into_iter().enumerate() {
        rank[v] = r;
    }
    rank
}

/// The vertex sequence greedy coloring visits for `order`.
pub fn coloring_sequence(g: &IntersectionGraph, order: ColoringOrder) -> Vec<usize> {
    let n = g.vertex_count();
    match order {
        ColoringOrder::Input => (0..n).collect(),
        ColoringOrder::LargestFirst => {
            let rank = label_ranks(&g.labels);
            let mut seq: Vec<usize> = (0..n).collect();
            seq.sort_by_key(|&v| (std::cmp::Reverse(g.degree(v)), rank[v]));
            seq
        }
        ColoringOrder::SmallestLast => {
            let rank = label_ranks(&g.labels);
            let mut degree: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
            let mut queue: BTreeSet<(usize, usize, usize)> = (0..n).map(|v| (degree[v], rank[v], v)).collect();
            let mut removed = vec![false; n];
            let mut removal = Vec::with_capacity(n);
            while let Some((_, _, v)) = queue.pop_first() {
                removed[v] = true;
                removal.push(v);
                for &w in g.neighbors(v) {
                    if !removed[w] {
                        queue.remove(&(degree[w], rank[w], w));
                        degree[w] -= 1;
                        queue.insert((degree[w], rank[w], w));
                    }
                }
            }
            removal.reverse();
            removal
        }
    }
}

/// Greedy proper coloring: each vertex, in `order`, takes the smallest color
/// not used by an already colored neighbor.
pub fn greedy_color(g: &IntersectionGraph, order: ColoringOrder) -> EntryColoring {
    let n = g.vertex_count();
    let mut colors = vec![0u32; n];
    // stamp[c] == v + 1 marks color c as blocked while coloring v
    let mut stamp: Vec<usize> = Vec::new();
    for v in coloring_sequence(g, order) {
        for &w in g.neighbors(v) {
            let c = colors[w] as usize;
            if c > 0 {
                if stamp.len() <= c {
                    stamp.resize(c + 1, 0);
                }
                stamp[c] = v + 1;
            }
        }
        let mut c = 1;
        while c < stamp.len() && stamp[c] == v + 1 {
            c += 1;
        }
        colors[v] = c as u32;
    }
    let k = colors.iter().copied().max().unwrap_or(0);
    EntryColoring { colors, k }
}

/// `max_w |{e : w ∈ F(e)}|`, the size of the largest clique induced by a
/// single shared node.
pub fn clique_lower_bound(f: &SetValuedFunction) -> usize {
    let mut counts = vec![0usize; f.node_count()];
    for e in 0..f.entry_count() {
        for &n in f.image(e) {
            counts[n] += 1;
        }
    }
    counts.into_iter().max().unwrap_or(0)
}

/// Exact chromatic number by branch and bound; refuses graphs above `cap`.
pub fn exact_chromatic(g: &IntersectionGraph, cap: usize) -> Result<u32> {
    oracle::chromatic_number(g.adjacency(), cap)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("v{i}")).collect()
    }

    fn complete(n: usize) -> IntersectionGraph {
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
        IntersectionGraph::from_edges(labels(n), edges)
    }

    fn cycle(n: usize) -> IntersectionGraph {
        IntersectionGraph::from_edges(labels(n), (0..n).map(|i| (i, (i + 1) % n)))
    }

    #[test]
    fn disjoint_images_are_edgeless() {
        let f = SetValuedFunction::from_pairs([("e1", "a"), ("e2", "b")]);
        let g = build_intersection_graph(&f);
        assert_eq!(g.vertex_count(), 2);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn shared_node_gives_single_edge() {
        let f = SetValuedFunction::from_pairs([("e1", "a"), ("e1", "b"), ("e2", "b"), ("e2", "c")]);
        let g = build_intersection_graph(&f);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1)]);
    }

    #[test]
    fn empty_images_are_isolated() {
        let mut f = SetValuedFunction::new();
        f.add_entry("a", ["x"]).unwrap();
        f.add_entry("b", Vec::<&str>::new()).unwrap();
        f.add_entry("c", ["x"]).unwrap();
        let g = build_intersection_graph(&f);
        assert_eq!(g.degree(1), 0);
        assert!(g.is_adjacent(0, 2));
    }

    #[test]
    fn duplicate_entry_rejected() {
        let mut f = SetValuedFunction::new();
        f.add_entry("a", ["x"]).unwrap();
        assert!(matches!(f.add_entry("a", ["y"]), Err(Error::DuplicateEntry(_))));
    }

    #[test]
    fn identical_images_stay_distinct_and_adjacent() {
        let f = SetValuedFunction::from_pairs([("a", "x"), ("b", "x")]);
        let g = build_intersection_graph(&f);
        assert!(g.is_adjacent(0, 1));
        assert_eq!(greedy_color(&g, ColoringOrder::Input).k(), 2);
    }

    #[test]
    fn edgeless_needs_one_color() {
        let g = IntersectionGraph::from_edges(labels(5), []);
        for order in ColoringOrder::ALL {
            assert_eq!(greedy_color(&g, order).k(), 1);
        }
        assert_eq!(exact_chromatic(&g, 20).unwrap(), 1);
        let empty = IntersectionGraph::from_edges(Vec::new(), []);
        assert_eq!(exact_chromatic(&empty, 20).unwrap(), 0);
        assert_eq!(greedy_color(&empty, ColoringOrder::SmallestLast).k(), 0);
    }

    #[test]
    fn complete_graph_needs_all_colors() {
        let g = complete(4);
        for order in ColoringOrder::ALL {
            let c = greedy_color(&g, order);
            assert_eq!(c.k(), 4);
            assert!(c.is_proper(&g));
        }
    }

    #[test]
    fn odd_cycle_is_three_chromatic() {
        assert_eq!(exact_chromatic(&cycle(5), 20).unwrap(), 3);
        assert_eq!(exact_chromatic(&cycle(6), 20).unwrap(), 2);
    }

    #[test]
    fn exact_respects_cap() {
        assert!(matches!(
            exact_chromatic(&cycle(21), 20),
            Err(Error::TooLargeForExact { size: 21, cap: 20 })
        ));
    }

    #[test]
    fn smallest_last_ties_break_on_label() {
        // a path a - b - c: a and c share degree 1, a is removed first
        let g = IntersectionGraph::from_edges(vec!["c".into(), "b".into(), "a".into()], [(0, 1), (1, 2)]);
        let seq = coloring_sequence(&g, ColoringOrder::SmallestLast);
        assert_eq!(*seq.last().unwrap(), 2);
    }

    #[test]
    fn clique_bound_counts_entries_per_node() {
        let disjoint = SetValuedFunction::from_pairs([("e1", "a"), ("e2", "b")]);
        assert_eq!(clique_lower_bound(&disjoint), 1);
        let star = SetValuedFunction::from_pairs([("e1", "w"), ("e2", "w"), ("e3", "w"), ("e3", "z")]);
        assert_eq!(clique_lower_bound(&star), 3);
        let mut empty = SetValuedFunction::new();
        empty.add_entry("e", Vec::<&str>::new()).unwrap();
        assert_eq!(clique_lower_bound(&empty), 0);
    }

    #[test]
    fn compact_removes_gaps() {
        let c = EntryColoring::new(vec![5, 2, 5, 9]).unwrap().compact();
        assert_eq!(c.colors(), &[2, 1, 2, 3]);
        assert_eq!(c.k(), 3);
    }

    #[test]
    fn zero_color_rejected() {
        assert!(EntryColoring::new(vec![1, 0]).is_err());
    }

    #[test]
    fn order_round_trips_through_str() {
        for order in ColoringOrder::ALL {
            assert_eq!(order.as_str().parse::<ColoringOrder>().unwrap(), order);
        }
        assert!("random".parse::<ColoringOrder>().is_err());
    }

    #[test]
    fn function_csv_round_trip() {
        let f = SetValuedFunction::from_pairs([("a", "1"), ("a", "2"), ("b", "2")]);
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "entry,node\na,1\na,2\nb,2\n");
        let g = SetValuedFunction::read_csv(&buf[..]).unwrap();
        assert_eq!(g.image_names(1), ["2"].into_iter().collect());
        assert!(matches!(
            SetValuedFunction::read_csv(&b"a,1,2\n"[..]),
            Err(Error::InconsistentArity { .. })
        ));
    }
}
