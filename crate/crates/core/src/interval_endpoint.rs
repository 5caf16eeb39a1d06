//! Endpoint schema for closed real intervals.
//!
//! Entries are the distinct endpoints `e`, with `F(e) = {I : y > e, x ≤ e}`.
//! Sorting entries and coloring them cyclically with `k` colors is proper as
//! soon as every interval's run `{e : x ≤ e < y}` has at most `k` entries.
//! A query `[a, b]` is then answered from one color column plus an ordered
//! scan of right endpoints.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::intersection::{EntryColoring, SetValuedFunction};
use crate::schema::{CliqueTable, NULL};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalRecord {
    pub id: String,
    pub x: f64,
    pub y: f64,
}

impl IntervalRecord {
    pub fn new(id: impl Into<String>, x: f64, y: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite()) || x > y {
            return Err(Error::InvalidRange { a: x, b: y });
        }
        // -0.0 and 0.0 must be one entry
        Ok(Self {
            id: id.into(),
            x: x + 0.0,
            y: y + 0.0,
        })
    }

    pub fn intersects(&self, a: f64, b: f64) -> bool {
        self.x <= b && self.y >= a
    }
}

pub fn read_intervals_csv<R: Read>(input: R) -> Result<Vec<IntervalRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    if header.len() != 3 || &header[0] != "id" || &header[1] != "x" || &header[2] != "y" {
        return Err(Error::MalformedCsv {
            line: 1,
            reason: "header must be id,x,y".into(),
        });
    }
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let num = |i: usize| -> Result<f64> {
            record[i].trim().parse().map_err(|_| Error::MalformedCsv {
                line,
                reason: format!("`{}` is not a number", &record[i]),
            })
        };
        out.push(IntervalRecord::new(&record[0], num(1)?, num(2)?)?);
    }
    Ok(out)
}

pub fn write_intervals_csv<W: Write>(intervals: &[IntervalRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["id", "x", "y"])?;
    for i in intervals {
        w.write_record([i.id.as_str(), &i.x.to_string(), &i.y.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Orders ids numerically when both parse as integers, else as text.
pub fn id_cmp(a: &str, b: &str) -> Ordering {
    match (a.parse::<i64>(), b.parse::<i64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y),
        (Ok(_), Err(_)) => Ordering::Less,
        (Err(_), Ok(_)) => Ordering::Greater,
        _ => a.cmp(b),
    }
}

#[derive(Debug, Clone)]
pub struct EndpointSchema {
    intervals: Vec<IntervalRecord>,
    entries: Vec<f64>,
    colors: Vec<u32>,
    k: u32,
    window: usize,
    escalations: u32,
    table: CliqueTable,
    // interval indices ordered by (y, index)
    by_y: Vec<usize>,
    // per entry: intervals whose column c(e) holds e
    postings: Vec<Vec<usize>>,
}

/// Both parts of an interval query, as indices into the input.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct IntervalQueryResult {
    /// Intervals containing the greatest entry `≤ b` and ending after `b`.
    pub straddling: Vec<usize>,
    /// Intervals whose right endpoint lies in `[a, b]`.
    pub ending: Vec<usize>,
}

impl IntervalQueryResult {
    pub fn len(&self) -> usize {
        self.straddling.len() + self.ending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn indices(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.straddling.iter().chain(&self.ending).copied().collect();
        all.sort_unstable();
        all
    }
}

fn entry_position(entries: &[f64], v: f64) -> usize {
    entries.partition_point(|&e| e < v)
}

pub fn build_endpoint_schema(intervals: &[IntervalRecord]) -> Result<EndpointSchema> {
    if intervals.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut ids = HashSet::new();
    for i in intervals {
        if !ids.insert(i.id.as_str()) {
            return Err(Error::DuplicateNode(i.id.clone()));
        }
    }
    let mut entries: Vec<f64> = intervals.iter().flat_map(|i| [i.x, i.y]).collect();
    entries.sort_by(f64::total_cmp);
    entries.dedup();

    // run of interval j: entry positions [start, end)
    let runs: Vec<(usize, usize)> = intervals
        .iter()
        .map(|i| (entry_position(&entries, i.x), entry_position(&entries, i.y)))
        .collect();
    let window = runs.iter().map(|(s, e)| e - s).max().unwrap_or(0);

    let mut k = window.max(1) as u32;
    let mut escalations = 0;
    let colors = loop {
        let colors: Vec<u32> = (0..entries.len()).map(|p| (p as u32 % k) + 1).collect();
        if runs_are_proper(&runs, &colors, k) {
            break colors;
        }
        k += 1;
        escalations += 1;
    };

    let labels: Vec<String> = entries.iter().map(|e| e.to_string()).collect();
    let ku = k as usize;
    let mut cells = vec![NULL; intervals.len() * ku];
    let mut postings = vec![Vec::new(); entries.len()];
    for (row, &(start, end)) in runs.iter().enumerate() {
        for p in start..end {
            let col = colors[p] as usize - 1;
            cells[row * ku + col] = p as u32;
        }
    }
    let names = intervals.iter().map(|i| i.id.clone()).collect();
    let table = CliqueTable::from_parts(ku, names, labels, cells)?;
    for row in 0..table.row_count() {
        for &cell in table.row_ids(row) {
            if cell != NULL {
                postings[cell as usize].push(row);
            }
        }
    }

    let mut by_y: Vec<usize> = (0..intervals.len()).collect();
    by_y.sort_by(|&a, &b| intervals[a].y.total_cmp(&intervals[b].y).then(a.cmp(&b)));

    Ok(EndpointSchema {
        intervals: intervals.to_vec(),
        entries,
        colors,
        k,
        window,
        escalations,
        table,
        by_y,
        postings,
    })
}

fn runs_are_proper(runs: &[(usize, usize)], colors: &[u32], k: u32) -> bool {
    let mut stamp = vec![usize::MAX; k as usize + 1];
    runs.iter().enumerate().all(|(j, &(start, end))| {
        colors[start..end].iter().all(|&c| {
            let fresh = stamp[c as usize] != j;
            stamp[c as usize] = j;
            fresh
        })
    })
}

impl EndpointSchema {
    pub fn intervals(&self) -> &[IntervalRecord] {
        &self.intervals
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn colors(&self) -> &[u32] {
        &self.colors
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// Largest number of entries in one interval's run.
    pub fn window(&self) -> usize {
        self.window
    }

    /// Times `k` was raised above the window bound.
    pub fn escalations(&self) -> u32 {
        self.escalations
    }

    pub fn table(&self) -> &CliqueTable {
        &self.table
    }

    /// `F` by its defining condition, for checking the table.
    pub fn endpoint_function(&self) -> SetValuedFunction {
        let mut f = SetValuedFunction::new();
        for i in &self.intervals {
            f.add_node(&i.id);
        }
        for e in &self.entries {
            let members = self.intervals.iter().filter(|i| i.y > *e && i.x <= *e).map(|i| i.id.as_str());
            f.add_entry(&e.to_string(), members).expect("entries are distinct");
        }
        f
    }

    pub fn coloring(&self) -> EntryColoring {
        EntryColoring::with_k(self.colors.clone(), self.k).expect("colors start at 1")
    }

    pub fn query(&self, a: f64, b: f64) -> Result<IntervalQueryResult> {
        if !(a.is_finite() && b.is_finite()) || a > b {
            return Err(Error::InvalidRange { a, b });
        }
        let below = self.entries.partition_point(|&e| e <= b);
        let straddling = match below.checked_sub(1) {
            Some(star) => {
                // y is itself an entry, so y > N* already means y > b
                let mut rows = self.postings[star].clone();
                rows.sort_unstable();
                rows
            }
            None => Vec::new(),
        };
        let ys = |j: usize| self.intervals[self.by_y[j]].y;
        let lo = partition(self.by_y.len(), |j| ys(j) < a);
        let hi = partition(self.by_y.len(), |j| ys(j) <= b);
        let mut ending: Vec<usize> = self.by_y[lo..hi].to_vec();
        ending.sort_unstable();
        Ok(IntervalQueryResult { straddling, ending })
    }

    pub fn stabbing_query(&self, p: f64) -> Result<IntervalQueryResult> {
        self.query(p, p)
    }

    /// Ids of the intervals meeting `[a, b]`, in id order.
    pub fn query_ids(&self, a: f64, b: f64) -> Result<Vec<String>> {
        Ok(sorted_ids(self.query(a, b)?.indices().into_iter().map(|j| self.intervals[j].id.clone())))
    }
}

fn partition(len: usize, pred: impl Fn(usize) -> bool) -> usize {
    let (mut lo, mut hi) = (0, len);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}

fn sorted_ids(ids: impl Iterator<Item = String>) -> Vec<String> {
    let mut v: Vec<String> = ids.collect();
    v.sort_by(|a, b| id_cmp(a, b));
    v
}

/// Length class of an interval: `⌊log2(y − x)⌋`, or its own class for
/// zero length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum BucketKey {
    ZeroLength,
    Log2(i32),
}

impl BucketKey {
    pub fn of(i: &IntervalRecord) -> Self {
        let len = i.y - i.x;
        if len == 0.0 {
            return BucketKey::ZeroLength;
        }
        BucketKey::Log2(floor_log2(len))
    }
}

/// Exact `⌊log2 v⌋` for positive `v`, read off the binary exponent.
fn floor_log2(v: f64) -> i32 {
    let bits = v.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    if exp == 0 {
        let mantissa = bits & ((1 << 52) - 1);
        -1074 + (63 - mantissa.leading_zeros() as i32)
    } else {
        exp - 1023
    }
}

/// One endpoint schema per length class.
#[derive(Debug, Clone)]
pub struct BucketedSchema {
    buckets: Vec<(BucketKey, Vec<usize>, EndpointSchema)>,
    total: usize,
}

pub fn bucketed_schema(intervals: &[IntervalRecord]) -> Result<BucketedSchema> {
    if intervals.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut groups: std::collections::BTreeMap<BucketKey, Vec<usize>> = Default::default();
    for (j, i) in intervals.iter().enumerate() {
        groups.entry(BucketKey::of(i)).or_default().push(j);
    }
    let buckets = groups
        .into_iter()
        .map(|(key, members)| {
            let subset: Vec<IntervalRecord> = members.iter().map(|&j| intervals[j].clone()).collect();
            Ok((key, members, build_endpoint_schema(&subset)?))
        })
        .collect::<Result<_>>()?;
    Ok(BucketedSchema {
        buckets,
        total: intervals.len(),
    })
}

impl BucketedSchema {
    pub fn buckets(&self) -> impl Iterator<Item = (BucketKey, &EndpointSchema)> {
        self.buckets.iter().map(|(k, _, s)| (*k, s))
    }

    pub fn max_k(&self) -> u32 {
        self.buckets.iter().map(|(_, _, s)| s.k()).max().unwrap_or(0)
    }

    pub fn total_columns(&self) -> u32 {
        self.buckets.iter().map(|(_, _, s)| s.k()).sum()
    }

    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Indices into the original input meeting `[a, b]`, ascending.
    pub fn query(&self, a: f64, b: f64) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        for (_, members, schema) in &self.buckets {
            out.extend(schema.query(a, b)?.indices().into_iter().map(|j| members[j]));
        }
        out.sort_unstable();
        Ok(out)
    }
}
