//! Command-line front end for `cliquedex`.
//!
//! Exit codes: 0 on success, 1 on domain or usage errors, 2 when a
//! verification against an oracle or a schema check fails. Machine output
//! (CSV or JSON) goes to stdout or `--out`; prose goes to stderr.

mod commands;

use std::ffi::OsString;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use cliquedex::intersection::ColoringOrder;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Domain(#[from] cliquedex::Error),

    #[error("{}: {source}", .path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error("{0}")]
    Invalid(String),

    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "cliquedex", version, about = "Build, verify and query clique indexing schemas")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a clique table from a digraph, an interval collection or the binary interval tree.
    #[command(subcommand)]
    Build(BuildCommand),
    /// Color a digraph (down-coloring) or the intersection graph of a function.
    Color(ColorArgs),
    /// Materialize a clique table from a function and a coloring.
    Materialize(MaterializeArgs),
    /// Build posting lists for a fact table and report their sizes.
    Index(IndexArgs),
    /// Evaluate a boolean query over a fact table through its clique table.
    Query(QueryArgs),
    /// Intervals meeting [a, b], one id per line.
    QueryIntervals(QueryIntervalsArgs),
    /// Binary interval tree intervals (or fact rows) overlapping interval k.
    QueryTree(QueryTreeArgs),
    /// Compare fast paths with oracles, or check a table against a function.
    Verify(VerifyArgs),
    /// Index-versus-scan measurements on a seeded synthetic workload.
    Bench(BenchArgs),
    /// Export a table as CSV or JSON, or a structure as an `entry,node` function.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
pub struct Caps {
    /// Largest vertex count for exact chromatic computations.
    #[arg(long, env = "CLIQUEDEX_EXACT_CAP", default_value_t = cliquedex::DEFAULT_EXACT_CAP)]
    pub exact_cap: usize,
    /// Largest vertex count for exact degeneracy; beyond it a peeled estimate is reported.
    #[arg(long, env = "CLIQUEDEX_DEGENERACY_CAP", default_value_t = cliquedex::DEFAULT_DEGENERACY_CAP)]
    pub degeneracy_cap: usize,
}

#[derive(Debug, Subcommand)]
pub enum BuildCommand {
    /// Index the descendant sets of an acyclic digraph given as a TAB edge list.
    Dag(BuildDagArgs),
    /// Endpoint schema for an `id,x,y` interval CSV.
    Intervals(BuildIntervalsArgs),
    /// The n-level binary interval tree table.
    Tree(BuildTreeArgs),
}

#[derive(Debug, Args)]
pub struct BuildDagArgs {
    #[arg(long)]
    pub edges: PathBuf,
    #[arg(long, default_value_t = ColoringOrder::SmallestLast)]
    pub order: ColoringOrder,
    /// Table CSV; without it the table goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Where to write the JSON sidecar with the coloring.
    #[arg(long)]
    pub sidecar: Option<PathBuf>,
    /// Renumber colors to drop unused ones.
    #[arg(long)]
    pub compact_colors: bool,
}

#[derive(Debug, Args)]
pub struct BuildIntervalsArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub sidecar: Option<PathBuf>,
    /// Check the table against the defining function (quadratic).
    #[arg(long)]
    pub verify: bool,
}

#[derive(Debug, Args)]
pub struct BuildTreeArgs {
    #[arg(long)]
    pub levels: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub sidecar: Option<PathBuf>,
    /// Use the literal membership formula; intermediate levels get NULL cells.
    #[arg(long)]
    pub literal: bool,
    #[arg(long, env = "CLIQUEDEX_TREE_CAP", default_value_t = cliquedex::DEFAULT_TREE_LEVEL_CAP)]
    pub cap: u32,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["edges", "function"]))]
pub struct ColorArgs {
    #[arg(long)]
    pub edges: Option<PathBuf>,
    /// `entry,node` CSV.
    #[arg(long)]
    pub function: Option<PathBuf>,
    /// Color digraph nodes so that nodes sharing an ancestor differ.
    #[arg(long, requires = "edges")]
    pub down: bool,
    #[arg(long, default_value_t = ColoringOrder::SmallestLast)]
    pub order: ColoringOrder,
    /// Also compute the exact chromatic number (bounded by --exact-cap).
    #[arg(long)]
    pub exact: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub caps: Caps,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["edges", "function"]))]
pub struct MaterializeArgs {
    /// Use the descendant sets of this digraph as the function.
    #[arg(long)]
    pub edges: Option<PathBuf>,
    #[arg(long)]
    pub function: Option<PathBuf>,
    /// Sidecar JSON holding the coloring; greedy with --order when absent.
    #[arg(long)]
    pub coloring: Option<PathBuf>,
    #[arg(long, default_value_t = ColoringOrder::SmallestLast)]
    pub order: ColoringOrder,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the sidecar for the coloring actually used.
    #[arg(long)]
    pub sidecar: Option<PathBuf>,
    #[arg(long)]
    pub compact_colors: bool,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    /// `rid,acc,m` CSV.
    #[arg(long)]
    pub fact: PathBuf,
    /// Clique table CSV.
    #[arg(long)]
    pub table: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[arg(long)]
    pub fact: PathBuf,
    #[arg(long)]
    pub table: PathBuf,
    /// e.g. `c8='GO:0006810' & c21='GO:0015203' | !c3='x'`. NOT complements
    /// within all fact rows, including rows whose node is not in the table.
    #[arg(long)]
    pub expr: String,
    /// Print matching rids one per line instead of the JSON summary.
    #[arg(long)]
    pub rids: bool,
    /// Re-evaluate by full scan and fail with exit code 2 on any difference.
    #[arg(long)]
    pub check: bool,
}

#[derive(Debug, Args)]
pub struct QueryIntervalsArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    pub a: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub b: f64,
    /// Answer through one schema per length class.
    #[arg(long)]
    pub bucketed: bool,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("tree").required(true).args(["levels", "table"]))]
pub struct QueryTreeArgs {
    #[arg(long)]
    pub k: u64,
    #[arg(long)]
    pub levels: Option<u32>,
    /// A table written by `build tree`.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Print the matching fact rows (`rid,acc,m`) instead of interval ids.
    #[arg(long)]
    pub fact: Option<PathBuf>,
    #[arg(long, env = "CLIQUEDEX_TREE_CAP", default_value_t = cliquedex::DEFAULT_TREE_LEVEL_CAP)]
    pub cap: u32,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Run every oracle comparison.
    #[arg(long, requires = "seed")]
    pub all: bool,
    /// Run one named comparison; repeatable.
    #[arg(long = "check", requires = "seed")]
    pub checks: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Check a table against a function and coloring instead.
    #[arg(long, requires_all = ["function", "coloring"], conflicts_with_all = ["all", "checks"])]
    pub table: Option<PathBuf>,
    #[arg(long)]
    pub function: Option<PathBuf>,
    #[arg(long)]
    pub coloring: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub seed: u64,
    /// Workload JSON; its seed is replaced by --seed.
    #[arg(long)]
    pub workload: Option<PathBuf>,
    #[arg(long, default_value_t = 1_500_000)]
    pub rows: usize,
    #[arg(long, default_value_t = 2000)]
    pub dag_nodes: usize,
    /// `single:1/24` or `triple:0.005`; repeatable. Defaults to both shapes at 1/24 and 1/204.
    #[arg(long = "query")]
    pub queries: Vec<String>,
    /// Run without any query (header-only report).
    #[arg(long, conflicts_with = "queries")]
    pub no_queries: bool,
    #[arg(long, default_value_t = 2)]
    pub lanes: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Closure {
    Descendants,
    Ancestors,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["table", "edges", "levels"]))]
pub struct ExportArgs {
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
    pub format: TableFormat,
    /// Export `u -> D[u]` (or `A[u]`) of this digraph as `entry,node` CSV.
    #[arg(long)]
    pub edges: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Closure::Descendants)]
    pub closure: Closure,
    /// Export the tree function with entries `(p,q)`.
    #[arg(long)]
    pub levels: Option<u32>,
    #[arg(long)]
    pub literal: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    1
                }
            };
        }
    };
    match commands::dispatch(cli.command, out, err) {
        Ok(()) => {
            let _ = out.flush();
            0
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
