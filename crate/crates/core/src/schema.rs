//! Clique tables: the relation `(node, c1, .., ck)` realizing a data entry
//! schema from a set-valued function and a proper coloring of its
//! intersection graph.
//!
//! Cell `(u, i)` holds entry `e` iff `u ∈ F(e)` and `c(e) = i`, and is NULL
//! otherwise. Cells are dictionary encoded; [`NULL`] is the sentinel.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intersection::{EntryColoring, SetValuedFunction};

/// Sentinel for a NULL cell; never a valid label id.
pub const NULL: u32 = u32::MAX;

#[derive(Debug, Clone)]
pub struct CliqueTable {
    k: usize,
    nodes: Vec<String>,
    labels: Vec<String>,
    cells: Vec<u32>,
    node_index: OnceLock<HashMap<String, usize>>,
    label_index: OnceLock<HashMap<String, u32>>,
}

impl PartialEq for CliqueTable {
    fn eq(&self, other: &Self) -> bool {
        self.k == other.k
            && self.nodes == other.nodes
            && (0..self.row_count()).all(|r| self.row(r).eq(other.row(r)))
    }
}

impl CliqueTable {
    /// An empty table with `k` color columns.
    pub fn new(k: usize) -> Self {
        Self::from_parts(k, Vec::new(), Vec::new(), Vec::new()).expect("empty table is consistent")
    }

    /// Assembles a table from raw parts: `cells` is row-major with `k`
    /// label ids (or [`NULL`]) per node.
    pub fn from_parts(k: usize, nodes: Vec<String>, labels: Vec<String>, cells: Vec<u32>) -> Result<Self> {
        if cells.len() != nodes.len() * k {
            return Err(Error::OutOfRange(format!(
                "{} cells for {} rows of {k} columns",
                cells.len(),
                nodes.len()
            )));
        }
        if let Some(bad) = cells.iter().find(|&&c| c != NULL && c as usize >= labels.len()) {
            return Err(Error::OutOfRange(format!("label id {bad} out of range")));
        }
        Ok(Self {
            k,
            nodes,
            labels,
            cells,
            node_index: OnceLock::new(),
            label_index: OnceLock::new(),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn row_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node(&self, row: usize) -> &str {
        &self.nodes[row]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, id: u32) -> &str {
        &self.labels[id as usize]
    }

    pub fn row_of(&self, node: &str) -> Option<usize> {
        self.node_index
            .get_or_init(|| self.nodes.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect())
            .get(node)
            .copied()
    }

    pub fn label_id(&self, label: &str) -> Option<u32> {
        self.label_index
            .get_or_init(|| {
                self.labels
                    .iter()
                    .enumerate()
                    .map(|(i, l)| (l.clone(), i as u32))
                    .collect()
            })
            .get(label)
            .copied()
    }

    /// Raw label id of cell `(row, column)`, columns numbered from 1.
    pub fn cell_id(&self, row: usize, column: usize) -> u32 {
        debug_assert!((1..=self.k).contains(&column));
        self.cells[row * self.k + column - 1]
    }

    pub fn cell(&self, row: usize, column: usize) -> Option<&str> {
        match self.cell_id(row, column) {
            NULL => None,
            id => Some(&self.labels[id as usize]),
        }
    }

    pub fn row(&self, row: usize) -> impl Iterator<Item = Option<&str>> + '_ {
        (1..=self.k).map(move |c| self.cell(row, c))
    }

    pub fn row_ids(&self, row: usize) -> &[u32] {
        &self.cells[row * self.k..(row + 1) * self.k]
    }

    pub fn null_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c == NULL).count()
    }

    /// Sets one cell to NULL. Used to build counterexamples.
    pub fn clear_cell(&mut self, row: usize, column: usize) {
        self.cells[row * self.k + column - 1] = NULL;
    }

    /// Writes `node,c1,..,ck` CSV; NULL cells are empty fields.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().flexible(false).from_writer(out);
        let mut header = Vec::with_capacity(self.k + 1);
        header.push("node".to_owned());
        header.extend((1..=self.k).map(|c| format!("c{c}")));
        w.write_record(&header)?;
        let mut record: Vec<&str> = Vec::with_capacity(self.k + 1);
        for r in 0..self.row_count() {
            record.clear();
            record.push(&self.nodes[r]);
            record.extend(self.row(r).map(|c| c.unwrap_or("")));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv writer emits utf-8"))
    }

    /// Reads the format written by [`write_csv`](Self::write_csv).
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(input);
        let mut records = rdr.records();
        let header = match records.next() {
            Some(h) => h?,
            None => {
                return Err(Error::MalformedCsv {
                    line: 1,
                    reason: "missing header".into(),
                })
            }
        };
        if header.get(0) != Some("node") {
            return Err(Error::MalformedCsv {
                line: 1,
                reason: "header must start with `node`".into(),
            });
        }
        for (i, name) in header.iter().enumerate().skip(1) {
            if name != format!("c{i}") {
                return Err(Error::MalformedCsv {
                    line: 1,
                    reason: format!("column {} should be `c{i}`, found `{name}`", i + 1),
                });
            }
        }
        let arity = header.len();
        let k = arity - 1;
        let mut nodes = Vec::new();
        let mut seen = HashMap::new();
        let mut labels = Vec::new();
        let mut label_ids: HashMap<String, u32> = HashMap::new();
        let mut cells = Vec::new();
        for record in records {
            let record = record?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            if record.len() != arity {
                return Err(Error::InconsistentArity {
                    line,
                    expected: arity,
                    found: record.len(),
                });
            }
            let node = &record[0];
            if node.is_empty() {
                return Err(Error::MalformedCsv {
                    line,
                    reason: "empty node".into(),
                });
            }
            if seen.insert(node.to_owned(), nodes.len()).is_some() {
                return Err(Error::MalformedCsv {
                    line,
                    reason: format!("duplicate node `{node}`"),
                });
            }
            nodes.push(node.to_owned());
            for field in record.iter().skip(1) {
                if field.is_empty() {
                    cells.push(NULL);
                } else {
                    let id = *label_ids.entry(field.to_owned()).or_insert_with(|| {
                        labels.push(field.to_owned());
                        labels.len() as u32 - 1
                    });
                    cells.push(id);
                }
            }
        }
        Self::from_parts(k, nodes, labels, cells)
    }
}

/// Builds `Clique(F)` from a proper coloring, one row per domain node in
/// domain order. `domain = None` uses the function's node order.
pub fn materialize(f: &SetValuedFunction, c: &EntryColoring, domain: Option<&[String]>) -> Result<CliqueTable> {
    if c.len() != f.entry_count() {
        return Err(Error::ColoringMismatch(format!(
            "{} colors for {} entries",
            c.len(),
            f.entry_count()
        )));
    }
    let k = c.k() as usize;
    let nodes: Vec<String> = match domain {
        Some(d) => d.to_vec(),
        None => f.nodes().to_vec(),
    };
    let row_of: HashMap<&str, usize> = nodes.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    // function node handle -> table row
    let mut node_row = Vec::with_capacity(f.node_count());
    for name in f.nodes() {
        node_row.push(row_of.get(name.as_str()).copied());
    }

    let mut labels: Vec<String> = Vec::new();
    let mut label_ids: HashMap<&str, u32> = HashMap::new();
    let mut column_label_owner: HashMap<(u32, u32), usize> = HashMap::new();
    let mut cells = vec![NULL; nodes.len() * k];
    let mut owner = vec![usize::MAX; nodes.len() * k];

    for e in 0..f.entry_count() {
        let color = c.color(e);
        let label = f.cell_label(e);
        if label.is_empty() {
            return Err(Error::ColoringMismatch(format!("entry `{}` has an empty cell label", f.entry(e))));
        }
        let id = *label_ids.entry(label).or_insert_with(|| {
            labels.push(label.to_owned());
            labels.len() as u32 - 1
        });
        if let Some(&other) = column_label_owner.get(&(color, id)) {
            return Err(Error::ColoringMismatch(format!(
                "entries `{}` and `{}` share label `{label}` in column {color}",
                f.entry(other),
                f.entry(e)
            )));
        }
        column_label_owner.insert((color, id), e);
        for &n in f.image(e) {
            let row = node_row[n].ok_or_else(|| Error::UnknownNode(f.node(n).to_owned()))?;
            let slot = row * k + color as usize - 1;
            if cells[slot] != NULL {
                return Err(Error::ColorCollision {
                    node: nodes[row].clone(),
                    color,
                    first: f.entry(owner[slot]).to_owned(),
                    second: f.entry(e).to_owned(),
                });
            }
            cells[slot] = id;
            owner[slot] = e;
        }
    }
    CliqueTable::from_parts(k, nodes, labels, cells)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Discrepancy {
    /// `node ∈ F(entry)` but the entry's column does not hold it there.
    Missing,
    /// The entry's column holds it at `node`, but `node ∉ F(entry)`.
    Extra,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub entry: String,
    pub node: String,
    pub kind: Discrepancy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SchemaVerdict {
    pub valid: bool,
    pub counterexample: Option<Counterexample>,
}

// (column, label id) -> rows holding that label in that column
fn column_occurrences(t: &CliqueTable) -> HashMap<(usize, u32), Vec<usize>> {
    let mut occ: HashMap<(usize, u32), Vec<usize>> = HashMap::new();
    for r in 0..t.row_count() {
        for (i, &id) in t.row_ids(r).iter().enumerate() {
            if id != NULL {
                occ.entry((i + 1, id)).or_default().push(r);
            }
        }
    }
    occ
}

fn entry_rows(f: &SetValuedFunction, t: &CliqueTable, e: usize) -> std::result::Result<Vec<usize>, String> {
    let mut rows = Vec::with_capacity(f.image(e).len());
    for &n in f.image(e) {
        match t.row_of(f.node(n)) {
            Some(r) => rows.push(r),
            None => return Err(f.node(n).to_owned()),
        }
    }
    rows.sort_unstable();
    Ok(rows)
}

/// Checks `F(e) = f_{c(e)}^{-1}(e)` for every entry, reporting the first
/// failure.
pub fn verify_schema(f: &SetValuedFunction, t: &CliqueTable, c: &EntryColoring) -> SchemaVerdict {
    let occ = column_occurrences(t);
    let empty = Vec::new();
    for e in 0..f.entry_count() {
        let fail = |node: String, kind| SchemaVerdict {
            valid: false,
            counterexample: Some(Counterexample {
                entry: f.entry(e).to_owned(),
                node,
                kind,
            }),
        };
        let expected = match entry_rows(f, t, e) {
            Ok(rows) => rows,
            Err(node) => return fail(node, Discrepancy::Missing),
        };
        let color = if e < c.len() { c.color(e) as usize } else { 0 };
        let actual = if (1..=t.k()).contains(&color) {
            t.label_id(f.cell_label(e))
                .and_then(|id| occ.get(&(color, id)))
                .unwrap_or(&empty)
        } else {
            &empty
        };
        if expected != *actual {
            if let Some(&r) = expected.iter().find(|r| actual.binary_search(r).is_err()) {
                return fail(t.node(r).to_owned(), Discrepancy::Missing);
            }
            if let Some(&r) = actual.iter().find(|r| expected.binary_search(r).is_err()) {
                return fail(t.node(r).to_owned(), Discrepancy::Extra);
            }
        }
    }
    SchemaVerdict {
        valid: true,
        counterexample: None,
    }
}

/// Recovers a coloring from a table: each entry gets the first column
/// whose occurrences of its label are exactly `F(e)`.
pub fn recover_coloring(f: &SetValuedFunction, t: &CliqueTable) -> Result<EntryColoring> {
    let occ = column_occurrences(t);
    let empty = Vec::new();
    let mut colors = Vec::with_capacity(f.entry_count());
    for e in 0..f.entry_count() {
        let expected = entry_rows(f, t, e).map_err(Error::UnknownNode)?;
        let label = t.label_id(f.cell_label(e));
        let found = (1..=t.k()).find(|&col| {
            let actual = label.and_then(|id| occ.get(&(col, id))).unwrap_or(&empty);
            *actual == expected
        });
        match found {
            Some(col) => colors.push(col as u32),
            None => {
                return Err(Error::ColoringMismatch(format!(
                    "no column realizes entry `{}`",
                    f.entry(e)
                )))
            }
        }
    }
    EntryColoring::with_k(colors, t.k() as u32)
}

/// JSON sidecar stored next to a clique table CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub k: u32,
    /// Entry id -> color. Empty when `color_rule` describes the coloring.
    #[serde(default)]
    pub colors: BTreeMap<String, u32>,
    /// Entry id -> cell label, only where they differ.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub labels: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color_rule: Option<String>,
    pub source: String,
    pub strategy: String,
}

impl Sidecar {
    pub fn from_coloring(f: &SetValuedFunction, c: &EntryColoring, source: &str, strategy: &str) -> Self {
        let colors = (0..f.entry_count()).map(|e| (f.entry(e).to_owned(), c.color(e))).collect();
        let labels = (0..f.entry_count())
            .filter(|&e| f.cell_label(e) != f.entry(e))
            .map(|e| (f.entry(e).to_owned(), f.cell_label(e).to_owned()))
            .collect();
        Self {
            k: c.k(),
            colors,
            labels,
            color_rule: None,
            source: source.to_owned(),
            strategy: strategy.to_owned(),
        }
    }

    /// The coloring in the function's entry order.
    pub fn coloring_for(&self, f: &SetValuedFunction) -> Result<EntryColoring> {
        let colors = f
            .entries()
            .iter()
            .map(|e| {
                self.colors
                    .get(e)
                    .copied()
                    .ok_or_else(|| Error::ColoringMismatch(format!("no color recorded for entry `{e}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        EntryColoring::with_k(colors, self.k)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
