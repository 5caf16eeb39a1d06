//! Posting-list access to fact tables through a clique table.
//!
//! A fact row `(rid, acc, m)` references a node `acc`. For every color
//! column `i` and entry `e`, the posting `(i, e)` holds the rids whose
//! clique row has `e` in column `i`: the in-process analogue of one bitmap
//! join index per color column.

pub mod bench;
pub mod bitset;
pub mod expr;

use std::collections::HashMap;
use std::io::{Read, Write};

pub use bitset::Bitset;
pub use expr::QueryExpr;

pub use crate::oracle::full_scan_oracle;
use crate::error::{Error, Result};
use crate::schema::{CliqueTable, NULL};

/// Rows `(rid, acc, m)` with `rid` the dense row ordinal.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FactTable {
    acc_names: Vec<String>,
    acc_index: HashMap<String, u32>,
    acc: Vec<u32>,
    m: Vec<i64>,
}

impl FactTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a row and returns its rid.
    pub fn push(&mut self, acc: &str, m: i64) -> u32 {
        let id = match self.acc_index.get(acc) {
            Some(&id) => id,
            None => {
                let id = self.acc_names.len() as u32;
                self.acc_names.push(acc.to_owned());
                self.acc_index.insert(acc.to_owned(), id);
                id
            }
        };
        self.acc.push(id);
        self.m.push(m);
        self.acc.len() as u32 - 1
    }

    pub fn len(&self) -> usize {
        self.acc.len()
    }

    pub fn is_empty(&self) -> bool {
        self.acc.is_empty()
    }

    pub fn acc(&self, rid: u32) -> &str {
        &self.acc_names[self.acc[rid as usize] as usize]
    }

    pub fn measure(&self, rid: u32) -> i64 {
        self.m[rid as usize]
    }

    pub fn measures(&self) -> &[i64] {
        &self.m
    }

    /// Distinct referenced nodes, in first-seen order.
    pub fn distinct_accs(&self) -> &[String] {
        &self.acc_names
    }

    /// Per-row handle into [`distinct_accs`](Self::distinct_accs).
    pub fn acc_ids(&self) -> &[u32] {
        &self.acc
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["rid", "acc", "m"])?;
        for rid in 0..self.len() as u32 {
            w.write_record([rid.to_string().as_str(), self.acc(rid), &self.measure(rid).to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads `rid,acc,m` CSV. Further columns are ignored; rids must be
    /// `0..N` in order.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(input);
        let header = rdr.headers()?.clone();
        if header.len() < 3 || &header[0] != "rid" || &header[1] != "acc" || &header[2] != "m" {
            return Err(Error::MalformedCsv {
                line: 1,
                reason: "header must start with rid,acc,m".into(),
            });
        }
        let mut t = FactTable::new();
        for record in rdr.records() {
            let record = record?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let bad = |reason: String| Error::MalformedCsv { line, reason };
            if record.len() < 3 {
                return Err(Error::InconsistentArity {
                    line,
                    expected: header.len(),
                    found: record.len(),
                });
            }
            let rid: u64 = record[0].trim().parse().map_err(|_| bad(format!("bad rid `{}`", &record[0])))?;
            if rid != t.len() as u64 {
                return Err(bad(format!("rid {rid} out of sequence, expected {}", t.len())));
            }
            let m: i64 = record[2].trim().parse().map_err(|_| bad(format!("bad measure `{}`", &record[2])))?;
            t.push(&record[1], m);
        }
        Ok(t)
    }
}

/// Row-id postings keyed by `(color column, entry label)`.
#[derive(Debug, Clone)]
pub struct PostingIndex {
    universe: u32,
    k: usize,
    labels: Vec<String>,
    label_ids: HashMap<String, u32>,
    postings: HashMap<(u32, u32), Bitset>,
    unresolved: usize,
}

impl PostingIndex {
    pub fn universe(&self) -> u32 {
        self.universe
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Fact rows whose `acc` has no row in the clique table.
    pub fn unresolved(&self) -> usize {
        self.unresolved
    }

    pub fn posting(&self, column: u32, value: &str) -> Option<&Bitset> {
        let id = self.label_ids.get(value)?;
        self.postings.get(&(column, *id))
    }

    pub fn posting_count(&self) -> usize {
        self.postings.len()
    }

    pub fn total_bytes(&self) -> usize {
        self.postings.values().map(Bitset::bytes).sum()
    }

    /// `(column, label, posting)` ordered by column then label.
    pub fn postings(&self) -> Vec<(u32, &str, &Bitset)> {
        let mut all: Vec<_> = self
            .postings
            .iter()
            .map(|(&(c, l), b)| (c, self.labels[l as usize].as_str(), b))
            .collect();
        all.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        all
    }
}

/// Builds one posting per `(column, entry)` pair present in the fact table.
pub fn build_index(fact: &FactTable, clique: &CliqueTable) -> PostingIndex {
    let universe = u32::try_from(fact.len()).expect("fact table exceeds u32 row ids");
    let k = clique.k();
    let acc_rows: Vec<Option<usize>> = fact.distinct_accs().iter().map(|a| clique.row_of(a)).collect();

    // Group rids by clique row so each row's cells are read once.
    let mut rids_by_row: HashMap<usize, Vec<u32>> = HashMap::new();
    let mut unresolved = 0;
    for (rid, &acc) in fact.acc_ids().iter().enumerate() {
        match acc_rows[acc as usize] {
            Some(row) => rids_by_row.entry(row).or_default().push(rid as u32),
            None => unresolved += 1,
        }
    }
    let mut lists: HashMap<(u32, u32), Vec<u32>> = HashMap::new();
    for (row, rids) in &rids_by_row {
        for (i, &cell) in clique.row_ids(*row).iter().enumerate() {
            if cell != NULL {
                lists.entry((i as u32 + 1, cell)).or_default().extend_from_slice(rids);
            }
        }
    }
    let postings = lists
        .into_iter()
        .map(|(key, mut rids)| {
            rids.sort_unstable();
            (key, Bitset::from_sorted(universe, rids))
        })
        .collect();

    let labels = clique.labels().to_vec();
    let label_ids = labels.iter().enumerate().map(|(i, l)| (l.clone(), i as u32)).collect();
    PostingIndex {
        universe,
        k,
        labels,
        label_ids,
        postings,
        unresolved,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalStats {
    pub postings_touched: usize,
    pub bytes_touched: usize,
}

pub fn evaluate(q: &QueryExpr, idx: &PostingIndex) -> Result<Bitset> {
    evaluate_with_stats(q, idx).map(|(rows, _)| rows)
}

/// Evaluates `q`, counting the postings read. A missing posting is the
/// empty set; `NOT` complements within all fact rows.
pub fn evaluate_with_stats(q: &QueryExpr, idx: &PostingIndex) -> Result<(Bitset, EvalStats)> {
    let mut stats = EvalStats::default();
    let rows = eval(q, idx, &mut stats)?;
    Ok((rows, stats))
}

fn eval(q: &QueryExpr, idx: &PostingIndex, stats: &mut EvalStats) -> Result<Bitset> {
    Ok(match q {
        QueryExpr::Atom { column, value } => {
            if *column == 0 || *column as usize > idx.k {
                return Err(Error::MalformedExpr(format!(
                    "column c{column} does not exist (table has {} color columns)",
                    idx.k
                )));
            }
            match idx.posting(*column, value) {
                Some(p) => {
                    stats.postings_touched += 1;
                    stats.bytes_touched += p.bytes();
                    p.clone()
                }
                None => Bitset::empty(idx.universe),
            }
        }
        QueryExpr::And(a, b) => eval(a, idx, stats)?.and(&eval(b, idx, stats)?),
        QueryExpr::Or(a, b) => eval(a, idx, stats)?.or(&eval(b, idx, stats)?),
        QueryExpr::Not(a) => eval(a, idx, stats)?.not(),
    })
}

/// Sum of `m` over the given rows, in `i128` with overflow detection.
pub fn sum_rows(rows: &Bitset, fact: &FactTable) -> Result<i128> {
    rows.iter()
        .try_fold(0i128, |acc, rid| acc.checked_add(i128::from(fact.measure(rid))))
        .ok_or(Error::Overflow)
}

pub fn aggregate_sum(q: &QueryExpr, idx: &PostingIndex, fact: &FactTable) -> Result<i128> {
    sum_rows(&evaluate(q, idx)?, fact)
}

/// Fraction of fact rows satisfying `q`.
pub fn selectivity(q: &QueryExpr, idx: &PostingIndex, fact: &FactTable) -> Result<f64> {
    if fact.is_empty() {
        return Err(Error::EmptyFactTable);
    }
    Ok(evaluate(q, idx)?.len() as f64 / fact.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval_tree::{build_tree_schema, TreeVariant};
    use crate::oracle::full_scan_oracle;

    fn tree4() -> CliqueTable {
        build_tree_schema(4, TreeVariant::TableConsistent, 24).unwrap()
    }

    #[test]
    fn empty_fact_table() {
        let fact = FactTable::new();
        let idx = build_index(&fact, &tree4());
        assert_eq!(idx.posting_count(), 0);
        let q = QueryExpr::atom(1, "1");
        assert!(evaluate(&q, &idx).unwrap().is_empty());
        assert_eq!(aggregate_sum(&q, &idx, &fact).unwrap(), 0);
        assert!(matches!(selectivity(&q, &idx, &fact), Err(Error::EmptyFactTable)));
    }

    #[test]
    fn single_node_posting_holds_every_row() {
        let mut fact = FactTable::new();
        for m in 0..50 {
            fact.push("10", m);
        }
        let idx = build_index(&fact, &tree4());
        // row 10 = (1, 2, 5, 10)
        assert_eq!(idx.posting(3, "5").unwrap().to_vec(), (0..50).collect::<Vec<_>>());
        assert_eq!(idx.posting(3, "4"), None);
    }

    #[test]
    fn complement_law_and_all_rows() {
        let mut fact = FactTable::new();
        for (i, acc) in ["8", "9", "10", "15", "nowhere"].iter().enumerate() {
            fact.push(acc, i as i64 * 10);
        }
        let idx = build_index(&fact, &tree4());
        assert_eq!(idx.unresolved(), 1);
        let a = QueryExpr::atom(2, "2");
        assert!(evaluate(&a.clone().and(a.clone().not()), &idx).unwrap().is_empty());
        let all = a.clone().or(a.clone().not());
        assert_eq!(evaluate(&all, &idx).unwrap().len(), 5);
        assert_eq!(aggregate_sum(&all, &idx, &fact).unwrap(), 100);
        assert_eq!(selectivity(&all, &idx, &fact).unwrap(), 1.0);
        assert_eq!(selectivity(&a.clone().and(a.clone().not()), &idx, &fact).unwrap(), 0.0);
        assert_eq!(evaluate(&a, &idx).unwrap().to_vec(), vec![0, 1, 2]);
        // NOT includes the unresolved row
        assert_eq!(evaluate(&a.not(), &idx).unwrap().to_vec(), vec![3, 4]);
    }

    #[test]
    fn unknown_column_is_malformed() {
        let mut fact = FactTable::new();
        fact.push("1", 1);
        let idx = build_index(&fact, &tree4());
        assert!(matches!(
            evaluate(&QueryExpr::atom(5, "1"), &idx),
            Err(Error::MalformedExpr(_))
        ));
    }

    #[test]
    fn overflow_detected() {
        let rows = Bitset::full(3);
        let mut fact = FactTable::new();
        for _ in 0..3 {
            fact.push("1", i64::MAX);
        }
        assert_eq!(sum_rows(&rows, &fact).unwrap(), 3 * i128::from(i64::MAX));
    }

    #[test]
    fn matches_scan_on_small_table() {
        let mut fact = FactTable::new();
        for i in 0..200u32 {
            fact.push(&((i % 15) + 1).to_string(), i64::from(i));
        }
        let clique = tree4();
        let idx = build_index(&fact, &clique);
        let q: QueryExpr = "c2='2' & !c4='9' | c3='7'".parse().unwrap();
        assert_eq!(evaluate(&q, &idx).unwrap().to_vec(), full_scan_oracle(&q, &fact, &clique));
    }

    #[test]
    fn fact_csv_round_trip_and_errors() {
        let mut fact = FactTable::new();
        fact.push("GO:1", 5);
        fact.push("GO:2", -3);
        let mut buf = Vec::new();
        fact.write_csv(&mut buf).unwrap();
        assert_eq!(FactTable::read_csv(buf.as_slice()).unwrap(), fact);
        let extra = "rid,acc,m,note\n0,a,1,x\n1,b,2,y\n";
        assert_eq!(FactTable::read_csv(extra.as_bytes()).unwrap().len(), 2);
        assert!(matches!(
            FactTable::read_csv("rid,acc,m\n1,a,1\n".as_bytes()),
            Err(Error::MalformedCsv { .. })
        ));
        assert!(matches!(
            FactTable::read_csv("id,acc,m\n".as_bytes()),
            Err(Error::MalformedCsv { line: 1, .. })
        ));
        assert!(matches!(
            FactTable::read_csv("rid,acc,m\n0,a,x\n".as_bytes()),
            Err(Error::MalformedCsv { .. })
        ));
    }
}
