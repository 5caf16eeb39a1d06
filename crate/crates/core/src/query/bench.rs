//! Posting-index versus full-scan measurements on synthetic workloads.
//!
//! A workload is a layered DAG, the clique table of its descendant function,
//! a fact table and a list of queries. Each query's match set is a set of
//! nodes, and the generator keeps match sets pairwise disjoint and draws
//! exactly `round(σ·N)` fact rows from each, so the achieved selectivity is
//! known before anything runs.
//!
//! Report columns, in order:
//!
//! | column | meaning |
//! |---|---|
//! | `query_id` | position in the workload |
//! | `shape` | `single` or `triple` |
//! | `expr` | the query text |
//! | `target_sigma`, `achieved_sigma` | requested and measured selectivity |
//! | `result_rows` | rows satisfying the query |
//! | `index_rows_touched` | fact rows read by the index path (result rows only) |
//! | `scan_rows_touched` | fact rows read by the scan (always `N`) |
//! | `postings_touched`, `posting_bytes` | postings read and their encoded size |
//! | `index_sum`, `scan_sum` | `sum(m)` from each path |
//! | `lane` | worker lane that ran the query |
//! | `index_ns`, `scan_ns` | wall-clock times; the only non-deterministic fields |

use std::collections::BTreeSet;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{build_index, evaluate_with_stats, sum_rows, FactTable, PostingIndex, QueryExpr};
use crate::digraph::AcyclicDigraph;
use crate::error::{Error, Result};
use crate::intersection::{build_intersection_graph, greedy_color, ColoringOrder};
use crate::schema::{materialize, CliqueTable, NULL};
use crate::synth;

pub const REPORT_HEADER: [&str; 15] = [
    "query_id",
    "shape",
    "expr",
    "target_sigma",
    "achieved_sigma",
    "result_rows",
    "index_rows_touched",
    "scan_rows_touched",
    "postings_touched",
    "posting_bytes",
    "index_sum",
    "scan_sum",
    "lane",
    "index_ns",
    "scan_ns",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QueryShape {
    /// One atom: rows below one DAG node.
    Single,
    /// Conjunction of three atoms on different color columns.
    Triple,
}

impl QueryShape {
    pub fn as_str(self) -> &'static str {
        match self {
            QueryShape::Single => "single",
            QueryShape::Triple => "triple",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuerySpec {
    pub shape: QueryShape,
    pub sigma: f64,
}

impl FromStr for QuerySpec {
    type Err = Error;

    /// `single:0.0417` or `triple:1/204`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::OutOfRange(format!("query `{s}` should look like single:1/24"));
        let (shape, sigma) = s.split_once(':').ok_or_else(bad)?;
        let shape = match shape {
            "single" => QueryShape::Single,
            "triple" => QueryShape::Triple,
            _ => return Err(bad()),
        };
        let sigma = match sigma.split_once('/') {
            Some((n, d)) => {
                let n: f64 = n.trim().parse().map_err(|_| bad())?;
                let d: f64 = d.trim().parse().map_err(|_| bad())?;
                n / d
            }
            None => sigma.trim().parse().map_err(|_| bad())?,
        };
        if !(0.0..=1.0).contains(&sigma) {
            return Err(bad());
        }
        Ok(QuerySpec { shape, sigma })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub seed: u64,
    pub rows: usize,
    pub dag_nodes: usize,
    pub queries: Vec<QuerySpec>,
    pub lanes: usize,
}

impl WorkloadSpec {
    /// 1.5M rows and one query of each shape at `σ = 1/24` and `σ = 1/204`.
    pub fn standard(seed: u64) -> Self {
        let q = |shape, sigma| QuerySpec { shape, sigma };
        Self {
            seed,
            rows: 1_500_000,
            dag_nodes: 2000,
            queries: vec![
                q(QueryShape::Single, 1.0 / 24.0),
                q(QueryShape::Single, 1.0 / 204.0),
                q(QueryShape::Triple, 1.0 / 24.0),
                q(QueryShape::Triple, 1.0 / 204.0),
            ],
            lanes: 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchQuery {
    pub spec: QuerySpec,
    pub expr: QueryExpr,
    pub rows_planted: usize,
}

#[derive(Debug, Clone)]
pub struct Workload {
    pub dag: AcyclicDigraph,
    pub clique: CliqueTable,
    pub fact: FactTable,
    pub queries: Vec<BenchQuery>,
}

pub fn generate_workload(spec: &WorkloadSpec) -> Result<Workload> {
    let mut rng = synth::rng(spec.seed);
    let n = spec.dag_nodes.max(8);
    let dag = synth::layered_dag(&mut rng, n, (n / 200).max(1), 8, 3);
    let f = dag.descendant_function();
    let coloring = greedy_color(&build_intersection_graph(&f), ColoringOrder::SmallestLast);
    let clique = materialize(&f, &coloring, None)?;

    let down: Vec<BTreeSet<usize>> = (0..n).map(|v| dag.descendants(v).into_iter().collect()).collect();
    let up: Vec<Vec<usize>> = (0..n).map(|v| dag.ancestors(v)).collect();
    let mut used: BTreeSet<usize> = BTreeSet::new();
    let mut picked = Vec::new();
    for q in &spec.queries {
        let (entries, matches) = pick_query(&mut rng, q.shape, &down, &up, &used)
            .ok_or_else(|| Error::OutOfRange(format!("no disjoint {} query left in a {n}-node dag", q.shape.as_str())))?;
        used.extend(&matches);
        let atoms = entries
            .iter()
            .map(|&e| QueryExpr::atom(coloring.color(e), dag.name(e)));
        let expr = QueryExpr::all_of(atoms).expect("at least one atom");
        picked.push((*q, expr, matches));
    }
    let background: Vec<usize> = (0..n).filter(|v| !used.contains(v)).collect();

    let mut accs: Vec<usize> = Vec::with_capacity(spec.rows);
    let mut queries = Vec::new();
    for (q, expr, matches) in picked {
        let count = (q.sigma * spec.rows as f64).round() as usize;
        let matches: Vec<usize> = matches.into_iter().collect();
        accs.extend((0..count).map(|_| matches[rng.gen_range(0..matches.len())]));
        queries.push(BenchQuery {
            spec: q,
            expr,
            rows_planted: count,
        });
    }
    if accs.len() > spec.rows {
        return Err(Error::OutOfRange("target selectivities sum above 1".into()));
    }
    if accs.len() < spec.rows && background.is_empty() {
        return Err(Error::OutOfRange("query match sets cover the whole dag".into()));
    }
    while accs.len() < spec.rows {
        accs.push(background[rng.gen_range(0..background.len())]);
    }
    accs.shuffle(&mut rng);
    let mut fact = FactTable::new();
    for acc in accs {
        fact.push(dag.name(acc), rng.gen_range(0..1000));
    }
    Ok(Workload {
        dag,
        clique,
        fact,
        queries,
    })
}

/// Entries for one query and the nodes it matches, disjoint from `used`.
fn pick_query(
    rng: &mut impl Rng,
    shape: QueryShape,
    down: &[BTreeSet<usize>],
    up: &[Vec<usize>],
    used: &BTreeSet<usize>,
) -> Option<(Vec<usize>, BTreeSet<usize>)> {
    let n = down.len();
    for _ in 0..10_000 {
        let (entries, matches) = match shape {
            QueryShape::Single => {
                let e = rng.gen_range(0..n);
                (vec![e], down[e].clone())
            }
            QueryShape::Triple => {
                let w = rng.gen_range(0..n);
                if up[w].len() < 3 {
                    continue;
                }
                let entries: Vec<usize> = up[w].choose_multiple(rng, 3).copied().collect();
                let matches = entries[1..]
                    .iter()
                    .fold(down[entries[0]].clone(), |acc, &e| &acc & &down[e]);
                (entries, matches)
            }
        };
        if matches.is_disjoint(used) && matches.len() < n {
            return Some((entries, matches));
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub query_id: usize,
    pub shape: QueryShape,
    pub expr: String,
    pub target_sigma: f64,
    pub achieved_sigma: f64,
    pub result_rows: u64,
    pub index_rows_touched: u64,
    pub scan_rows_touched: u64,
    pub postings_touched: usize,
    pub posting_bytes: usize,
    pub index_sum: i128,
    pub scan_sum: i128,
    pub lane: usize,
    pub index_ns: u128,
    pub scan_ns: u128,
}

impl BenchRow {
    pub fn agrees(&self) -> bool {
        self.index_sum == self.scan_sum && self.index_rows_touched == self.result_rows
    }
}

/// Runs every query through both paths, spreading queries round-robin over
/// `lanes` threads.
pub fn run_bench(w: &Workload, lanes: usize) -> Result<Vec<BenchRow>> {
    let idx = build_index(&w.fact, &w.clique);
    let scanner = Scanner::new(&w.fact, &w.clique);
    let lanes = lanes.max(1);
    let mut rows: Vec<BenchRow> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..lanes)
            .map(|lane| {
                let (idx, scanner) = (&idx, &scanner);
                s.spawn(move || {
                    w.queries
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| i % lanes == lane)
                        .map(|(i, q)| run_one(i, q, lane, w, idx, scanner))
                        .collect::<Result<Vec<_>>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("bench lane panicked"))
            .collect::<Result<Vec<_>>>()
    })?
    .into_iter()
    .flatten()
    .collect();
    rows.sort_by_key(|r| r.query_id);
    Ok(rows)
}

fn run_one(
    query_id: usize,
    q: &BenchQuery,
    lane: usize,
    w: &Workload,
    idx: &PostingIndex,
    scanner: &Scanner,
) -> Result<BenchRow> {
    let start = Instant::now();
    let (rows, stats) = evaluate_with_stats(&q.expr, idx)?;
    let index_sum = sum_rows(&rows, &w.fact)?;
    let index_ns = start.elapsed().as_nanos();

    let start = Instant::now();
    let (scan_count, scan_sum) = scanner.run(&q.expr)?;
    let scan_ns = start.elapsed().as_nanos();

    let n = w.fact.len();
    debug_assert_eq!(scan_count as u64, rows.len());
    Ok(BenchRow {
        query_id,
        shape: q.spec.shape,
        expr: q.expr.to_string(),
        target_sigma: q.spec.sigma,
        achieved_sigma: if n == 0 { 0.0 } else { rows.len() as f64 / n as f64 },
        result_rows: rows.len(),
        index_rows_touched: rows.len(),
        scan_rows_touched: n as u64,
        postings_touched: stats.postings_touched,
        posting_bytes: stats.bytes_touched,
        index_sum,
        scan_sum,
        lane,
        index_ns,
        scan_ns,
    })
}

/// Row-at-a-time evaluation: resolve each row's clique row, then test cells.
struct Scanner<'a> {
    fact: &'a FactTable,
    clique: &'a CliqueTable,
    // clique row per distinct acc
    acc_rows: Vec<Option<usize>>,
}

enum Compiled {
    Atom(usize, u32),
    Never,
    And(Box<Compiled>, Box<Compiled>),
    Or(Box<Compiled>, Box<Compiled>),
    Not(Box<Compiled>),
}

impl<'a> Scanner<'a> {
    fn new(fact: &'a FactTable, clique: &'a CliqueTable) -> Self {
        let acc_rows = fact.distinct_accs().iter().map(|a| clique.row_of(a)).collect();
        Self { fact, clique, acc_rows }
    }

    fn compile(&self, q: &QueryExpr) -> Result<Compiled> {
        Ok(match q {
            QueryExpr::Atom { column, value } => {
                if *column == 0 || *column as usize > self.clique.k() {
                    return Err(Error::MalformedExpr(format!("column c{column} does not exist")));
                }
                match self.clique.label_id(value) {
                    Some(id) => Compiled::Atom(*column as usize - 1, id),
                    None => Compiled::Never,
                }
            }
            QueryExpr::And(a, b) => Compiled::And(Box::new(self.compile(a)?), Box::new(self.compile(b)?)),
            QueryExpr::Or(a, b) => Compiled::Or(Box::new(self.compile(a)?), Box::new(self.compile(b)?)),
            QueryExpr::Not(a) => Compiled::Not(Box::new(self.compile(a)?)),
        })
    }

    fn run(&self, q: &QueryExpr) -> Result<(usize, i128)> {
        let plan = self.compile(q)?;
        let mut count = 0;
        let mut sum: i128 = 0;
        for (rid, &acc) in self.fact.acc_ids().iter().enumerate() {
            let cells = self.acc_rows[acc as usize].map(|r| self.clique.row_ids(r));
            if test(&plan, cells) {
                count += 1;
                sum = sum
                    .checked_add(i128::from(self.fact.measure(rid as u32)))
                    .ok_or(Error::Overflow)?;
            }
        }
        Ok((count, sum))
    }
}

fn test(plan: &Compiled, cells: Option<&[u32]>) -> bool {
    match plan {
        Compiled::Atom(col, id) => cells.is_some_and(|c| c[*col] == *id && *id != NULL),
        Compiled::Never => false,
        Compiled::And(a, b) => test(a, cells) && test(b, cells),
        Compiled::Or(a, b) => test(a, cells) || test(b, cells),
        Compiled::Not(a) => !test(a, cells),
    }
}

pub fn write_report<W: Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_HEADER)?;
    for r in rows {
        w.write_record([
            r.query_id.to_string(),
            r.shape.as_str().to_owned(),
            r.expr.clone(),
            format!("{:.6}", r.target_sigma),
            format!("{:.6}", r.achieved_sigma),
            r.result_rows.to_string(),
            r.index_rows_touched.to_string(),
            r.scan_rows_touched.to_string(),
            r.postings_touched.to_string(),
            r.posting_bytes.to_string(),
            r.index_sum.to_string(),
            r.scan_sum.to_string(),
            r.lane.to_string(),
            r.index_ns.to_string(),
            r.scan_ns.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> WorkloadSpec {
        WorkloadSpec {
            rows: 20_000,
            dag_nodes: 400,
            ..WorkloadSpec::standard(seed)
        }
    }

    #[test]
    fn query_specs() {
        let q: QuerySpec = "single:1/24".parse().unwrap();
        assert_eq!(q.shape, QueryShape::Single);
        assert!((q.sigma - 1.0 / 24.0).abs() < 1e-12);
        assert_eq!("triple:0.5".parse::<QuerySpec>().unwrap().sigma, 0.5);
        assert!("double:0.1".parse::<QuerySpec>().is_err());
        assert!("single:2".parse::<QuerySpec>().is_err());
    }

    #[test]
    fn planted_selectivity_is_achieved() {
        let w = generate_workload(&small(3)).unwrap();
        let rows = run_bench(&w, 2).unwrap();
        assert_eq!(rows.len(), 4);
        for r in &rows {
            assert!(r.agrees(), "{r:?}");
            assert_eq!(r.result_rows as usize, w.queries[r.query_id].rows_planted);
            assert_eq!(r.scan_rows_touched, 20_000);
        }
        assert_eq!(rows[0].lane, 0);
        assert_eq!(rows[1].lane, 1);
    }

    #[test]
    fn deterministic_columns() {
        let run = || {
            let w = generate_workload(&small(9)).unwrap();
            run_bench(&w, 3)
                .unwrap()
                .into_iter()
                .map(|r| (r.expr, r.result_rows, r.index_sum, r.posting_bytes, r.lane))
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn zero_queries_give_header_only() {
        let spec = WorkloadSpec {
            queries: Vec::new(),
            ..small(1)
        };
        let rows = run_bench(&generate_workload(&spec).unwrap(), 1).unwrap();
        let mut buf = Vec::new();
        write_report(&rows, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{}\n", REPORT_HEADER.join(",")));
    }
}
