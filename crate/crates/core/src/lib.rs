//! Clique indexing schemas for fact tables whose rows point into a digraph,
//! an interval collection or a binary interval tree.
//!
//! A table column referencing nodes of some structure (an acyclic digraph, a
//! collection of intervals, a fixed binary interval tree) is indexed by a
//! *set-valued function* `F` that maps data entries to node sets. A proper
//! coloring of the intersection graph `Int(F)` with `k` colors yields a
//! relation `(node, c1, .., ck)` (the clique table) in which every entry is
//! recoverable from exactly one color column. Queries over unions,
//! intersections and complements of the sets `F(e)` then reduce to posting
//! list algebra over those columns.
//!
//! Module map:
//!
//! * [`digraph`]: acyclic digraphs, descendant/ancestor closures, the
//!   down-hypergraph, its degeneracy and down-coloring bounds.
//! * [`intersection`]: set-valued functions, intersection graphs and greedy
//!   coloring.
//! * [`schema`]: clique table materialization, verification and CSV/JSON IO.
//! * [`query`]: posting-list index over fact tables, boolean queries, bench.
//! * [`interval_endpoint`]: endpoint schemas for interval and stabbing queries.
//! * [`interval_tree`]: the binary interval tree schema and overlap queries.
//! * [`oracle`]: brute-force reference implementations.
//! * [`synth`]: seeded generators for random fixtures and workloads.
//! * [`verify`]: oracle comparison runs used by the `verify` subcommand.

pub mod digraph;
pub mod error;
pub mod intersection;
pub mod interval_endpoint;
pub mod interval_tree;
pub mod oracle;
pub mod query;
pub mod schema;
pub mod synth;
pub mod verify;

pub use error::{Error, Result};

/// Default cap on vertex count for exhaustive computations.
pub const DEFAULT_EXACT_CAP: usize = 20;
/// Default cap on hypergraph vertices for exact degeneracy.
pub const DEFAULT_DEGENERACY_CAP: usize = 16;
/// Default cap on binary interval tree levels.
pub const DEFAULT_TREE_LEVEL_CAP: u32 = 24;
