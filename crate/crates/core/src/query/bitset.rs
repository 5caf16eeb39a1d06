//! Compressed row-id sets.
//!
//! The universe `0..n` is cut into fixed blocks of 4096 bits. Consecutive
//! empty or full blocks collapse into a single run; other blocks keep their
//! 64 words. Boolean operations walk both operands block by block.

use std::fmt;

const WORDS: usize = 64;
const BLOCK_BITS: u32 = (WORDS * 64) as u32;

type Words = [u64; WORDS];

#[derive(Clone, PartialEq, Eq)]
enum Run {
    Empty(u32),
    Full(u32),
    Dense(Box<Words>),
}

#[derive(Clone, Copy)]
enum Block<'a> {
    Empty,
    Full,
    Dense(&'a Words),
}

#[derive(Clone, PartialEq, Eq)]
pub struct Bitset {
    universe: u32,
    runs: Vec<Run>,
    len: u64,
}

impl fmt::Debug for Bitset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Bitset")
            .field("universe", &self.universe)
            .field("len", &self.len)
            .field("runs", &self.runs.len())
            .finish()
    }
}

fn block_count(universe: u32) -> u32 {
    universe.div_ceil(BLOCK_BITS)
}

// Bits of block `b` that lie inside the universe.
fn block_mask(universe: u32, b: u32) -> Words {
    let valid = (universe - b * BLOCK_BITS).min(BLOCK_BITS) as usize;
    let mut mask = [0u64; WORDS];
    for (i, w) in mask.iter_mut().enumerate() {
        let lo = i * 64;
        if lo + 64 <= valid {
            *w = u64::MAX;
        } else if lo < valid {
            *w = (1u64 << (valid - lo)) - 1;
        }
    }
    mask
}

fn block_len(universe: u32, b: u32) -> u64 {
    u64::from((universe - b * BLOCK_BITS).min(BLOCK_BITS))
}

struct Builder {
    universe: u32,
    runs: Vec<Run>,
    next: u32,
    len: u64,
}

impl Builder {
    fn new(universe: u32) -> Self {
        Self {
            universe,
            runs: Vec::new(),
            next: 0,
            len: 0,
        }
    }

    fn push_empty(&mut self) {
        self.next += 1;
        match self.runs.last_mut() {
            Some(Run::Empty(n)) => *n += 1,
            _ => self.runs.push(Run::Empty(1)),
        }
    }

    fn push_full(&mut self) {
        self.len += block_len(self.universe, self.next);
        self.next += 1;
        match self.runs.last_mut() {
            Some(Run::Full(n)) => *n += 1,
            _ => self.runs.push(Run::Full(1)),
        }
    }

    // `words` must already be masked to the universe.
    fn push_words(&mut self, words: Words) {
        let ones: u64 = words.iter().map(|w| u64::from(w.count_ones())).sum();
        if ones == 0 {
            self.push_empty();
        } else if ones == block_len(self.universe, self.next) {
            self.push_full();
        } else {
            self.len += ones;
            self.next += 1;
            self.runs.push(Run::Dense(Box::new(words)));
        }
    }

    fn finish(mut self) -> Bitset {
        while self.next < block_count(self.universe) {
            self.push_empty();
        }
        Bitset {
            universe: self.universe,
            runs: self.runs,
            len: self.len,
        }
    }
}

struct Blocks<'a> {
    runs: std::slice::Iter<'a, Run>,
    current: Option<(Block<'a>, u32)>,
}

impl<'a> Iterator for Blocks<'a> {
    type Item = Block<'a>;

    fn next(&mut self) -> Option<Block<'a>> {
        loop {
            if let Some((block, left)) = &mut self.current {
                if *left > 0 {
                    *left -= 1;
                    return Some(*block);
                }
            }
            self.current = Some(match self.runs.next()? {
                Run::Empty(n) => (Block::Empty, *n),
                Run::Full(n) => (Block::Full, *n),
                Run::Dense(w) => (Block::Dense(w), 1),
            });
        }
    }
}

impl Bitset {
    pub fn empty(universe: u32) -> Self {
        Builder::new(universe).finish()
    }

    pub fn full(universe: u32) -> Self {
        let mut b = Builder::new(universe);
        for _ in 0..block_count(universe) {
            b.push_full();
        }
        b.finish()
    }

    /// Builds from ascending row ids; duplicates are ignored.
    ///
    /// # Panics
    /// If an id is outside the universe or the ids are not ascending.
    pub fn from_sorted(universe: u32, ids: impl IntoIterator<Item = u32>) -> Self {
        let mut b = Builder::new(universe);
        let mut words = [0u64; WORDS];
        let mut block = 0u32;
        let mut dirty = false;
        let mut last: Option<u32> = None;
        for id in ids {
            assert!(id < universe, "row id {id} outside universe {universe}");
            assert!(last.is_none_or(|l| l <= id), "row ids must be ascending");
            last = Some(id);
            let target = id / BLOCK_BITS;
            if target != block {
                if dirty {
                    b.push_words(words);
                    words = [0; WORDS];
                    block += 1;
                }
                while block < target {
                    b.push_empty();
                    block += 1;
                }
            }
            let bit = (id % BLOCK_BITS) as usize;
            words[bit / 64] |= 1 << (bit % 64);
            dirty = true;
        }
        if dirty {
            b.push_words(words);
        }
        b.finish()
    }

    pub fn universe(&self) -> u32 {
        self.universe
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Approximate heap footprint in bytes.
    pub fn bytes(&self) -> usize {
        let dense = self.runs.iter().filter(|r| matches!(r, Run::Dense(_))).count();
        self.runs.len() * std::mem::size_of::<Run>() + dense * std::mem::size_of::<Words>()
    }

    fn blocks(&self) -> Blocks<'_> {
        Blocks {
            runs: self.runs.iter(),
            current: None,
        }
    }

    fn zip_with(&self, other: &Bitset, op: impl Fn(Block<'_>, Block<'_>, u32) -> Owned) -> Bitset {
        assert_eq!(self.universe, other.universe, "bitsets over different universes");
        let mut b = Builder::new(self.universe);
        for (i, (x, y)) in self.blocks().zip(other.blocks()).enumerate() {
            match op(x, y, i as u32) {
                Owned::Empty => b.push_empty(),
                Owned::Full => b.push_full(),
                Owned::Words(w) => b.push_words(w),
            }
        }
        b.finish()
    }

    pub fn and(&self, other: &Bitset) -> Bitset {
        self.zip_with(other, |x, y, _| match (x, y) {
            (Block::Empty, _) | (_, Block::Empty) => Owned::Empty,
            (Block::Full, o) | (o, Block::Full) => Owned::from(o),
            (Block::Dense(a), Block::Dense(b)) => Owned::Words(std::array::from_fn(|i| a[i] & b[i])),
        })
    }

    pub fn or(&self, other: &Bitset) -> Bitset {
        self.zip_with(other, |x, y, _| match (x, y) {
            (Block::Full, _) | (_, Block::Full) => Owned::Full,
            (Block::Empty, o) | (o, Block::Empty) => Owned::from(o),
            (Block::Dense(a), Block::Dense(b)) => Owned::Words(std::array::from_fn(|i| a[i] | b[i])),
        })
    }

    /// Complement within the universe.
    pub fn not(&self) -> Bitset {
        let mut b = Builder::new(self.universe);
        for (i, block) in self.blocks().enumerate() {
            match block {
                Block::Empty => b.push_full(),
                Block::Full => b.push_empty(),
                Block::Dense(w) => {
                    let mask = block_mask(self.universe, i as u32);
                    b.push_words(std::array::from_fn(|j| !w[j] & mask[j]));
                }
            }
        }
        b.finish()
    }

    pub fn contains(&self, id: u32) -> bool {
        if id >= self.universe {
            return false;
        }
        let target = id / BLOCK_BITS;
        match self.blocks().nth(target as usize) {
            Some(Block::Full) => true,
            Some(Block::Dense(w)) => {
                let bit = (id % BLOCK_BITS) as usize;
                w[bit / 64] >> (bit % 64) & 1 == 1
            }
            _ => false,
        }
    }

    /// Ascending row ids.
    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        let universe = self.universe;
        self.blocks().enumerate().flat_map(move |(b, block)| {
            let base = b as u32 * BLOCK_BITS;
            let ids: Box<dyn Iterator<Item = u32>> = match block {
                Block::Empty => Box::new(std::iter::empty()),
                Block::Full => Box::new(base..base + block_len(universe, b as u32) as u32),
                Block::Dense(w) => Box::new(w.iter().enumerate().flat_map(move |(i, &word)| {
                    let mut word = word;
                    std::iter::from_fn(move || {
                        if word == 0 {
                            return None;
                        }
                        let t = word.trailing_zeros();
                        word &= word - 1;
                        Some(base + i as u32 * 64 + t)
                    })
                })),
            };
            ids
        })
    }

    pub fn to_vec(&self) -> Vec<u32> {
        self.iter().collect()
    }
}

enum Owned {
    Empty,
    Full,
    Words(Words),
}

impl From<Block<'_>> for Owned {
    fn from(b: Block<'_>) -> Self {
        match b {
            Block::Empty => Owned::Empty,
            Block::Full => Owned::Full,
            Block::Dense(w) => Owned::Words(*w),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    #[test]
    fn empty_and_full() {
        let e = Bitset::empty(10_000);
        let f = Bitset::full(10_000);
        assert_eq!(e.len(), 0);
        assert_eq!(f.len(), 10_000);
        assert_eq!(e.not(), f);
        assert_eq!(f.to_vec().last(), Some(&9_999));
        assert_eq!(Bitset::full(0).len(), 0);
    }

    #[test]
    fn runs_compress() {
        let all: Vec<u32> = (0..BLOCK_BITS * 3).collect();
        let s = Bitset::from_sorted(BLOCK_BITS * 5, all);
        assert_eq!(s.runs.len(), 2);
        assert!(s.bytes() < 100);
    }

    #[test]
    fn partial_last_block_full() {
        let n = BLOCK_BITS + 10;
        let s = Bitset::from_sorted(n, BLOCK_BITS..n);
        assert!(matches!(s.runs.last(), Some(Run::Full(1))));
        assert_eq!(s.not().len(), u64::from(BLOCK_BITS));
    }

    #[test]
    fn contains_matches_iter() {
        let ids = [0, 5, 4095, 4096, 9000];
        let s = Bitset::from_sorted(10_000, ids);
        for id in 0..10_000 {
            assert_eq!(s.contains(id), ids.contains(&id));
        }
        assert!(!s.contains(20_000));
    }

    fn model(universe: u32) -> impl Strategy<Value = BTreeSet<u32>> {
        prop_oneof![
            prop::collection::btree_set(0..universe, 0..600),
            // long runs to exercise Full blocks
            (0..universe, 0..universe).prop_map(|(a, b)| (a.min(b)..a.max(b)).collect()),
        ]
    }

    proptest! {
        #[test]
        fn ops_agree_with_sets(a in model(13_000), b in model(13_000)) {
            let n = 13_000;
            let x = Bitset::from_sorted(n, a.iter().copied());
            let y = Bitset::from_sorted(n, b.iter().copied());
            prop_assert_eq!(x.to_vec(), a.iter().copied().collect::<Vec<_>>());
            prop_assert_eq!(x.len(), a.len() as u64);
            prop_assert_eq!(x.and(&y).to_vec(), a.intersection(&b).copied().collect::<Vec<_>>());
            prop_assert_eq!(x.or(&y).to_vec(), a.union(&b).copied().collect::<Vec<_>>());
            let complement: Vec<u32> = (0..n).filter(|i| !a.contains(i)).collect();
            prop_assert_eq!(x.not().to_vec(), complement);
            prop_assert_eq!(x.not().not(), x);
        }
    }
}
