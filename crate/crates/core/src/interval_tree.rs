//! The binary interval tree over `[0, 1)` and its `n`-color clique schema.
//!
//! Interval `k ∈ 1..2^n` sits on level `L(k) = ⌊log2 k⌋ + 1` and covers the
//! half-open dyadic extent `[(k − 2^{L−1}) / 2^{L−1}, (k − 2^{L−1} + 1) / 2^{L−1})`.
//! Data entries are pairs `(p, q)` with `1 ≤ q ≤ n` and `1 ≤ p < 2^q`; entry
//! `(p, q)` gets color `q`, and the color column `q` stores only `p`.
//!
//! Membership comes in two variants. [`TreeVariant::TableConsistent`]
//! (default) puts `k` in `G(p, q)` when `k = p`, or when `L(p) = q ≤ L(k)` and
//! `p` is the level-`q` ancestor of `k`. [`TreeVariant::Literal`] evaluates
//! `k = p or (2^q ≤ 2p ≤ k < 2^n and ⌊k·2^q / 2^n⌋ = p)`, which agrees with the
//! first variant on bottom-level intervals but leaves intermediate levels
//! NULL in the lower color columns.

use std::collections::HashSet;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::intersection::{EntryColoring, SetValuedFunction};
use crate::query::{Bitset, PostingIndex};
use crate::schema::{CliqueTable, NULL};

/// Ids fit in `u32` cells below this many levels.
const MAX_LEVELS: u32 = 31;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TreeVariant {
    #[default]
    TableConsistent,
    Literal,
}

impl FromStr for TreeVariant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "table" | "table-consistent" => Ok(Self::TableConsistent),
            "literal" => Ok(Self::Literal),
            other => Err(format!("unknown tree variant `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeParams {
    levels: u32,
}

/// `⌊log2 k⌋ + 1` for `k ≥ 1`, in integer arithmetic.
pub fn level(k: u64) -> u32 {
    debug_assert!(k >= 1);
    64 - k.leading_zeros()
}

impl TreeParams {
    pub fn new(levels: u32) -> Result<Self> {
        if !(1..=MAX_LEVELS).contains(&levels) {
            return Err(Error::OutOfRange(format!("tree levels must be in 1..={MAX_LEVELS}, got {levels}")));
        }
        Ok(Self { levels })
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    /// `2^n − 1`.
    pub fn interval_count(&self) -> u64 {
        (1u64 << self.levels) - 1
    }

    pub fn check(&self, k: u64) -> Result<u64> {
        if k == 0 || k > self.interval_count() {
            return Err(Error::OutOfRange(format!(
                "interval {k} outside 1..={} for {} levels",
                self.interval_count(),
                self.levels
            )));
        }
        Ok(k)
    }

    pub fn level(&self, k: u64) -> Result<u32> {
        self.check(k).map(level)
    }

    /// `R_L, R_{L−1}, .., R_1` with `R_L = k` and `R_{t−1} = ⌊R_t / 2⌋`.
    pub fn ancestor_path(&self, k: u64) -> Result<Vec<u64>> {
        self.check(k)?;
        Ok(std::iter::successors(Some(k), |&r| (r > 1).then_some(r / 2)).collect())
    }

    /// The half-open extent of interval `k`.
    pub fn extent(&self, k: u64) -> Result<Extent> {
        self.check(k)?;
        let exp = level(k) - 1;
        let lo = k - (1 << exp);
        Ok(Extent { lo, hi: lo + 1, exp })
    }

    fn check_entry(&self, e: TreeEntry) -> Result<TreeEntry> {
        if e.q == 0 || e.q > self.levels || e.p == 0 || e.p >= (1u64 << e.q) {
            return Err(Error::OutOfRange(format!(
                "entry ({}, {}) needs 1 <= q <= {} and 1 <= p < 2^q",
                e.p, e.q, self.levels
            )));
        }
        Ok(e)
    }

    /// Whether interval `k` belongs to `G(p, q)`.
    pub fn is_member(&self, e: TreeEntry, k: u64, variant: TreeVariant) -> Result<bool> {
        let TreeEntry { p, q } = self.check_entry(e)?;
        self.check(k)?;
        if k == p {
            return Ok(true);
        }
        Ok(match variant {
            TreeVariant::TableConsistent => {
                let lk = level(k);
                level(p) == q && lk >= q && k >> (lk - q) == p
            }
            TreeVariant::Literal => {
                let n = self.levels;
                (1u64 << q) <= 2 * p && 2 * p <= k && k < (1u64 << n) && (k << q) >> n == p
            }
        })
    }

    /// Sorted members of `G(p, q)`.
    pub fn entry_members(&self, e: TreeEntry, variant: TreeVariant) -> Result<Vec<u64>> {
        let TreeEntry { p, q } = self.check_entry(e)?;
        let mut out = vec![p];
        if level(p) == q {
            // descendants of p, level by level
            let deepest = match variant {
                TreeVariant::TableConsistent => q + 1..=self.levels,
                TreeVariant::Literal => self.levels..=self.levels,
            };
            for l in deepest {
                if l <= q {
                    continue;
                }
                let shift = l - q;
                out.extend(p << shift..(p + 1) << shift);
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    /// The color-`q` entry holding interval `k`, i.e. cell `(k, q)`.
    fn cell(&self, k: u64, q: u32, variant: TreeVariant) -> Option<u64> {
        let lk = level(k);
        if q >= lk {
            return Some(k);
        }
        match variant {
            TreeVariant::TableConsistent => Some(k >> (lk - q)),
            TreeVariant::Literal => (lk == self.levels).then(|| k >> (self.levels - q)),
        }
    }

    /// `G(R_t, L)` for `t = L..1`: the disjoint pieces of the overlap set of `k`.
    pub fn overlap_decomposition(&self, k: u64) -> Result<Vec<(u64, Vec<u64>)>> {
        let l = self.level(k)?;
        self.ancestor_path(k)?
            .into_iter()
            .map(|r| {
                let members = self.entry_members(TreeEntry { p: r, q: l }, TreeVariant::TableConsistent)?;
                Ok((r, members))
            })
            .collect()
    }
}

/// `[lo / 2^exp, hi / 2^exp)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Extent {
    pub lo: u64,
    pub hi: u64,
    pub exp: u32,
}

impl Extent {
    pub fn lower(&self) -> f64 {
        self.lo as f64 / (1u64 << self.exp) as f64
    }

    pub fn upper(&self) -> f64 {
        self.hi as f64 / (1u64 << self.exp) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct TreeEntry {
    pub p: u64,
    pub q: u32,
}

impl TreeEntry {
    pub fn new(p: u64, q: u32) -> Self {
        Self { p, q }
    }

    pub fn color(&self) -> u32 {
        self.q
    }

    pub fn id(&self) -> String {
        format!("({},{})", self.p, self.q)
    }
}

/// Materializes `clique_G`: rows `1..2^n`, color columns `1..=n`.
pub fn build_tree_schema(levels: u32, variant: TreeVariant, cap: u32) -> Result<CliqueTable> {
    if levels > cap {
        return Err(Error::OutOfRange(format!("{levels} levels exceeds the cap of {cap}")));
    }
    let params = TreeParams::new(levels)?;
    let count = params.interval_count();
    let names: Vec<String> = (1..=count).map(|k| k.to_string()).collect();
    let n = levels as usize;
    let mut cells = Vec::with_capacity(count as usize * n);
    for k in 1..=count {
        for q in 1..=levels {
            // label id of p is p - 1
            cells.push(params.cell(k, q, variant).map_or(NULL, |p| (p - 1) as u32));
        }
    }
    CliqueTable::from_parts(n, names.clone(), names, cells)
}

/// `G` as an explicit set-valued function with entries `(p,q)` labeled `p`,
/// together with the coloring `c(p, q) = q`. Sized `n·(2^n − 1)`; meant for
/// small `n`.
pub fn tree_function(levels: u32, variant: TreeVariant) -> Result<(SetValuedFunction, EntryColoring)> {
    let params = TreeParams::new(levels)?;
    let mut f = SetValuedFunction::new();
    for k in 1..=params.interval_count() {
        f.add_node(&k.to_string());
    }
    let mut colors = Vec::new();
    for q in 1..=levels {
        for p in 1..(1u64 << q) {
            let e = TreeEntry { p, q };
            let members = params.entry_members(e, variant)?;
            f.add_labeled_entry(&e.id(), &p.to_string(), members.iter().map(u64::to_string))?;
            colors.push(q);
        }
    }
    Ok((f, EntryColoring::with_k(colors, levels)?))
}

/// The first-choice function `F(i) = {j : extent(j) ∩ extent(i) ≠ ∅}`.
pub fn naive_overlap_function(levels: u32) -> Result<SetValuedFunction> {
    let params = TreeParams::new(levels)?;
    let mut f = SetValuedFunction::new();
    for i in 1..=params.interval_count() {
        let members = params
            .overlap_decomposition(i)?
            .into_iter()
            .flat_map(|(_, m)| m)
            .map(|j| j.to_string());
        f.add_entry(&i.to_string(), members)?;
    }
    Ok(f)
}

/// Intervals overlapping `k`: rows of `schema` whose column `L(k)` holds a
/// value of the ancestor path of `k`.
pub fn overlap_query(k: u64, schema: &CliqueTable) -> Result<Vec<u64>> {
    let params = TreeParams::new(schema.k() as u32)?;
    if schema.row_count() as u64 != params.interval_count() {
        return Err(Error::OutOfRange(format!(
            "table has {} rows, a {}-level tree has {}",
            schema.row_count(),
            params.levels(),
            params.interval_count()
        )));
    }
    let column = params.level(k)? as usize;
    let wanted: HashSet<u32> = params
        .ancestor_path(k)?
        .iter()
        .filter_map(|r| schema.label_id(&r.to_string()))
        .collect();
    Ok((0..schema.row_count())
        .filter(|&row| wanted.contains(&schema.cell_id(row, column)))
        .map(|row| row as u64 + 1)
        .collect())
}

/// Fact rows referencing an interval that overlaps `k`: the union of
/// postings `(L(k), R_t)`.
pub fn tree_fact_query(k: u64, idx: &PostingIndex) -> Result<Bitset> {
    let params = TreeParams::new(idx.k() as u32)?;
    let column = params.level(k)?;
    let mut rows = Bitset::empty(idx.universe());
    for r in params.ancestor_path(k)? {
        if let Some(p) = idx.posting(column, &r.to_string()) {
            rows = rows.or(p);
        }
    }
    Ok(rows)
}

/// The bottom-level interval containing `x ∈ [0, 1)`.
pub fn map_point_to_leaf(x: f64, levels: u32) -> Result<u64> {
    let params = TreeParams::new(levels)?;
    if !(0.0..1.0).contains(&x) {
        return Err(Error::OutOfRange(format!("point {x} outside [0, 1)")));
    }
    let leaves = 1u64 << (params.levels() - 1);
    // exact: scaling by a power of two
    Ok(leaves + (x * leaves as f64).floor() as u64)
}

/// Minimal set of tree intervals whose extents partition `[a, b)` clipped to
/// `[0, 1)`, after widening the ends outward to leaf boundaries.
pub fn map_range_to_cover(a: f64, b: f64, levels: u32) -> Result<Vec<u64>> {
    let params = TreeParams::new(levels)?;
    if !(a.is_finite() && b.is_finite()) || a < 0.0 || a > b {
        return Err(Error::InvalidRange { a, b });
    }
    let leaves = 1u64 << (params.levels() - 1);
    let scale = leaves as f64;
    let lo = (a.min(1.0) * scale).floor() as u64;
    let hi = (b.min(1.0) * scale).ceil() as u64;
    let mut cover = Vec::new();
    let (mut l, mut r) = (lo + leaves, hi + leaves);
    if a == b {
        return Ok(cover);
    }
    while l < r {
        if l & 1 == 1 {
            cover.push(l);
            l += 1;
        }
        if r & 1 == 1 {
            r -= 1;
            cover.push(r);
        }
        l >>= 1;
        r >>= 1;
    }
    cover.sort_unstable();
    Ok(cover)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::{build_index, FactTable};
    use crate::schema::verify_schema;

    const TABLE_N4: [[u64; 4]; 15] = [
        [1, 1, 1, 1],
        [1, 2, 2, 2],
        [1, 3, 3, 3],
        [1, 2, 4, 4],
        [1, 2, 5, 5],
        [1, 3, 6, 6],
        [1, 3, 7, 7],
        [1, 2, 4, 8],
        [1, 2, 4, 9],
        [1, 2, 5, 10],
        [1, 2, 5, 11],
        [1, 3, 6, 12],
        [1, 3, 6, 13],
        [1, 3, 7, 14],
        [1, 3, 7, 15],
    ];

    fn p4() -> TreeParams {
        TreeParams::new(4).unwrap()
    }

    #[test]
    fn levels() {
        assert_eq!(level(1), 1);
        assert_eq!(level(5), 3);
        assert_eq!(p4().level(15).unwrap(), 4);
        assert!(matches!(p4().level(16), Err(Error::OutOfRange(_))));
        assert!(matches!(p4().level(0), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn ancestor_paths() {
        assert_eq!(p4().ancestor_path(1).unwrap(), vec![1]);
        assert_eq!(p4().ancestor_path(5).unwrap(), vec![5, 2, 1]);
        assert_eq!(p4().ancestor_path(13).unwrap(), vec![13, 6, 3, 1]);
        for k in 1..=15 {
            let path = p4().ancestor_path(k).unwrap();
            assert_eq!(*path.last().unwrap(), 1);
            for (i, r) in path.iter().enumerate() {
                assert_eq!(level(*r) as usize, path.len() - i);
            }
        }
    }

    #[test]
    fn members() {
        let p = p4();
        let g = |pp, q| p.entry_members(TreeEntry::new(pp, q), TreeVariant::TableConsistent).unwrap();
        assert_eq!(g(5, 3), vec![5, 10, 11]);
        assert_eq!(g(2, 3), vec![2]);
        assert_eq!(g(1, 3), vec![1]);
        assert_eq!(g(2, 2), vec![2, 4, 5, 8, 9, 10, 11]);
        assert!(matches!(
            p.entry_members(TreeEntry::new(4, 2), TreeVariant::TableConsistent),
            Err(Error::OutOfRange(_))
        ));
        assert!(matches!(
            p.entry_members(TreeEntry::new(1, 5), TreeVariant::TableConsistent),
            Err(Error::OutOfRange(_))
        ));
    }

    #[test]
    fn literal_variant_keeps_only_bottom_descendants() {
        let p = p4();
        assert_eq!(
            p.entry_members(TreeEntry::new(2, 2), TreeVariant::Literal).unwrap(),
            vec![2, 8, 9, 10, 11]
        );
        assert_eq!(
            p.entry_members(TreeEntry::new(5, 3), TreeVariant::Literal).unwrap(),
            vec![5, 10, 11]
        );
    }

    #[test]
    fn membership_formula_matches_member_lists() {
        let p = TreeParams::new(6).unwrap();
        for variant in [TreeVariant::TableConsistent, TreeVariant::Literal] {
            for q in 1..=6 {
                for pp in 1..(1u64 << q) {
                    let e = TreeEntry::new(pp, q);
                    let listed = p.entry_members(e, variant).unwrap();
                    let by_formula: Vec<u64> = (1..=p.interval_count())
                        .filter(|&k| p.is_member(e, k, variant).unwrap())
                        .collect();
                    assert_eq!(listed, by_formula, "{e:?} {variant:?}");
                }
            }
        }
    }

    #[test]
    fn variants_agree_on_bottom_level() {
        let p = TreeParams::new(5).unwrap();
        for q in 1..=5 {
            for pp in 1..(1u64 << q) {
                let e = TreeEntry::new(pp, q);
                for k in 16..32 {
                    assert_eq!(
                        p.is_member(e, k, TreeVariant::TableConsistent).unwrap(),
                        p.is_member(e, k, TreeVariant::Literal).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn golden_table_n4() {
        let t = build_tree_schema(4, TreeVariant::TableConsistent, 24).unwrap();
        assert_eq!(t.row_count(), 15);
        assert_eq!(t.k(), 4);
        for (row, expected) in TABLE_N4.iter().enumerate() {
            assert_eq!(t.node(row), (row + 1).to_string());
            let cells: Vec<u64> = t.row(row).map(|c| c.unwrap().parse().unwrap()).collect();
            assert_eq!(&cells[..], expected, "row {}", row + 1);
        }
    }

    #[test]
    fn single_level_tree() {
        let t = build_tree_schema(1, TreeVariant::TableConsistent, 24).unwrap();
        assert_eq!(t.to_csv_string().unwrap(), "node,c1\n1,1\n");
    }

    #[test]
    fn cap_and_range() {
        assert!(matches!(
            build_tree_schema(25, TreeVariant::TableConsistent, 24),
            Err(Error::OutOfRange(_))
        ));
        assert!(matches!(TreeParams::new(0), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn literal_table_has_nulls_only_above_bottom() {
        let t = build_tree_schema(4, TreeVariant::Literal, 24).unwrap();
        // rows 8..15 agree with the golden table
        for row in 7..15 {
            let cells: Vec<u64> = t.row(row).map(|c| c.unwrap().parse().unwrap()).collect();
            assert_eq!(&cells[..], &TABLE_N4[row]);
        }
        // row 5: (NULL, NULL, 5, 5)
        assert_eq!(t.row(4).collect::<Vec<_>>(), vec![None, None, Some("5"), Some("5")]);
        let (f, c) = tree_function(4, TreeVariant::Literal).unwrap();
        assert!(verify_schema(&f, &t, &c).valid);
    }

    #[test]
    fn schema_verifies_against_function() {
        for n in 1..=6 {
            let t = build_tree_schema(n, TreeVariant::TableConsistent, 24).unwrap();
            let (f, c) = tree_function(n, TreeVariant::TableConsistent).unwrap();
            let v = verify_schema(&f, &t, &c);
            assert!(v.valid, "n = {n}: {v:?}");
            assert_eq!(t.null_count(), 0);
        }
    }

    #[test]
    fn overlap_examples() {
        let t = build_tree_schema(4, TreeVariant::TableConsistent, 24).unwrap();
        assert_eq!(overlap_query(1, &t).unwrap(), (1..=15).collect::<Vec<_>>());
        assert_eq!(overlap_query(5, &t).unwrap(), vec![1, 2, 5, 10, 11]);
        assert_eq!(overlap_query(8, &t).unwrap(), vec![1, 2, 4, 8]);
        assert!(matches!(overlap_query(16, &t), Err(Error::OutOfRange(_))));
        let pieces = p4().overlap_decomposition(5).unwrap();
        assert_eq!(pieces, vec![(5, vec![5, 10, 11]), (2, vec![2]), (1, vec![1])]);
    }

    #[test]
    fn points_and_ranges() {
        assert_eq!(map_point_to_leaf(0.0, 4).unwrap(), 8);
        let leaf = map_point_to_leaf(0.3, 4).unwrap();
        assert_eq!(leaf, 10);
        let ext = p4().extent(leaf).unwrap();
        assert_eq!((ext.lower(), ext.upper()), (0.25, 0.375));
        assert!(map_point_to_leaf(1.0, 4).is_err());
        assert!(map_point_to_leaf(-0.1, 4).is_err());
        assert_eq!(map_range_to_cover(0.0, 0.5, 4).unwrap(), vec![2]);
        assert_eq!(map_range_to_cover(0.0, 1.0, 4).unwrap(), vec![1]);
        assert_eq!(map_range_to_cover(0.125, 0.75, 4).unwrap(), vec![5, 6, 9]);
        assert_eq!(map_range_to_cover(0.5, 0.5, 4).unwrap(), Vec::<u64>::new());
        assert_eq!(map_range_to_cover(0.9, 7.0, 4).unwrap(), vec![15]);
        assert!(matches!(map_range_to_cover(0.6, 0.5, 4), Err(Error::InvalidRange { .. })));
    }

    #[test]
    fn cover_partitions_the_widened_range() {
        let p = TreeParams::new(6).unwrap();
        for lo in 0..32u64 {
            for hi in lo + 1..=32 {
                let cover = map_range_to_cover(lo as f64 / 32.0, hi as f64 / 32.0, 6).unwrap();
                let mut covered: Vec<u64> = Vec::new();
                for k in &cover {
                    let e = p.extent(*k).unwrap();
                    let shift = 5 - e.exp;
                    covered.extend(e.lo << shift..e.hi << shift);
                }
                covered.sort_unstable();
                assert_eq!(covered, (lo..hi).collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn fact_queries() {
        let t = build_tree_schema(4, TreeVariant::TableConsistent, 24).unwrap();
        let mut fact = FactTable::new();
        for m in 0..7 {
            fact.push("10", m);
        }
        let idx = build_index(&fact, &t);
        assert_eq!(tree_fact_query(5, &idx).unwrap().len(), 7);
        assert_eq!(tree_fact_query(4, &idx).unwrap().len(), 0);
        let empty = build_index(&FactTable::new(), &t);
        assert!(tree_fact_query(5, &empty).unwrap().is_empty());
    }
}
