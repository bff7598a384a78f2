//! The `geogrid` command line: cell inspection, covering, enrichment,
//! discretization, triple emission, querying, benchmarking and sharding.
//! Exit status is 0 on success, 1 on runtime errors and 2 on usage errors;
//! errors are reported as one JSON object per line on stderr.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use geogrid_core::wkt::AntimeridianPolicy;
use serde_json::json;

mod commands;
pub mod config;
mod io;

pub use config::{RunConfig, CONFIG_ENV, CONFIG_SCHEMA_VERSION};

pub const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (config schema 1)");

#[derive(Debug, Parser)]
#[command(name = "geogrid", version = VERSION, about = "Discrete global grid enrichment of geospatial knowledge graphs")]
#[command(arg_required_else_help = true)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Configuration overrides accepted by every subcommand.
#[derive(Debug, Args, Default)]
pub struct GlobalArgs {
    /// key=value configuration file (default: $GEOGRID_CONFIG)
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Worker threads (default: logical cores)
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,
    /// Antimeridian policy for cell and feature geometry: split|reject|point
    #[arg(long, global = true)]
    pub antimeridian: Option<AntimeridianPolicy>,
    /// Resource IRI base
    #[arg(long, global = true, value_name = "IRI")]
    pub base: Option<String>,
    /// Ontology IRI base
    #[arg(long, global = true, value_name = "IRI")]
    pub ontology: Option<String>,
    /// Densification step for input features, in degrees
    #[arg(long, global = true, value_name = "DEG")]
    pub densify: Option<f64>,
    /// Write to this file instead of stdout
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Inspect cells
    #[command(subcommand)]
    Cell(CellCmd),
    /// Parse and serialize WKT
    #[command(subcommand)]
    Wkt(WktCmd),
    /// Cover features with cells
    Cover(CoverArgs),
    /// Relation records between features and cells
    Enrich(EnrichArgs),
    /// Cell-level observations from vector or raster data
    #[command(subcommand)]
    Discretize(DiscretizeCmd),
    /// Turn records, observations or cell lists into N-Triples
    Emit(EmitArgs),
    /// Evaluate a property path or a basic graph pattern over N-Triples
    Query(QueryArgs),
    /// Enriched versus geometric retrieval on synthetic data
    Bench(BenchArgs),
    /// Location-based sharding
    #[command(subcommand)]
    Shard(ShardCmd),
    /// Print the resolved configuration
    Config,
}

#[derive(Debug, Subcommand)]
pub enum CellCmd {
    /// Id, token, face, level, IJ, centre and area of a cell
    Info {
        /// Hex token or decimal id
        cell: String,
        #[arg(long)]
        json: bool,
    },
    /// The four children of a cell
    Children {
        cell: String,
        #[arg(long)]
        json: bool,
    },
    /// The cell outline as WKT
    Wkt {
        cell: String,
        /// Densify cell edges to at most this many degrees
        #[arg(long, value_name = "DEG")]
        edge_step: Option<f64>,
    },
}

#[derive(Debug, Subcommand)]
pub enum WktCmd {
    /// Validate id<TAB>WKT records and print them normalized
    Parse {
        #[arg(default_value = "-")]
        input: String,
    },
    /// The outline of a cell as WKT
    Cell {
        cell: String,
        #[arg(long, value_name = "DEG")]
        edge_step: Option<f64>,
    },
}

#[derive(Debug, Args)]
pub struct CoverArgs {
    /// id<TAB>WKT records, or one bare WKT per line
    #[arg(default_value = "-")]
    pub input: String,
    /// ordinary|homogeneous|interior
    #[arg(long, default_value = "ordinary")]
    pub mode: geogrid_core::cover::CoverMode,
    /// Maximum level (homogeneous: the level)
    #[arg(long)]
    pub level: Option<u8>,
    #[arg(long)]
    pub min_level: Option<u8>,
    #[arg(long)]
    pub max_cells: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum RecordFormat {
    Tsv,
    Ntriples,
}

#[derive(Debug, Args)]
pub struct EnrichArgs {
    #[arg(default_value = "-")]
    pub input: String,
    #[arg(long)]
    pub level: Option<u8>,
    /// Multi-level enrichment (areal features only)
    #[arg(long)]
    pub compressed: bool,
    #[arg(long, default_value_t = 3, requires = "compressed")]
    pub min_level: u8,
    /// Deepest level of overlap records (default: --level)
    #[arg(long, requires = "compressed")]
    pub boundary_level: Option<u8>,
    #[arg(long, value_enum, default_value = "tsv")]
    pub format: RecordFormat,
}

#[derive(Debug, Subcommand)]
pub enum DiscretizeCmd {
    /// Overlap areas of areal features per cell
    Vector {
        #[arg(default_value = "-")]
        input: String,
        #[command(flatten)]
        common: DiscretizeCommon,
    },
    /// Per-cell statistics of an ESRI ASCII grid (sidecar <grid>.json for CRS and categories)
    Raster {
        #[arg(default_value = "-")]
        input: String,
        /// percent|mean|sum
        #[arg(long, default_value = "percent")]
        stat: geogrid_core::discretize::RasterStat,
        #[command(flatten)]
        common: DiscretizeCommon,
    },
}

#[derive(Debug, Args)]
pub struct DiscretizeCommon {
    #[arg(long)]
    pub level: Option<u8>,
    /// Property local name, or an IRI under the ontology base
    #[arg(long)]
    pub property: String,
    /// Phenomenon time: YYYY, YYYY-MM or YYYY-MM-DD
    #[arg(long)]
    pub time: String,
    /// property<TAB>kind<TAB>unit[<TAB>class] lines
    #[arg(long, value_name = "PATH")]
    pub manifest: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "tsv")]
    pub format: RecordFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum EmitKind {
    Auto,
    Relations,
    Observations,
    Cells,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum EmitFormat {
    Ntriples,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ClosureArg {
    None,
    Cells,
    All,
}

#[derive(Debug, Args)]
pub struct EmitArgs {
    #[arg(default_value = "-")]
    pub input: String,
    #[arg(long, value_enum, default_value = "ntriples")]
    pub format: EmitFormat,
    /// Input kind; auto reads it from the column count
    #[arg(long, value_enum, default_value = "auto")]
    pub kind: EmitKind,
    /// Materialize transitive within/contains over cell edges or all edges
    #[arg(long, value_enum, default_value = "none")]
    pub closure: ClosureArg,
    /// Cell geometry: split|reject|point|none (default: the antimeridian policy)
    #[arg(long)]
    pub geometry: Option<geogrid_graph::emit::CellGeometry>,
    #[arg(long, value_name = "DEG")]
    pub edge_step: Option<f64>,
    /// Also describe every cell the relations mention
    #[arg(long)]
    pub with_cells: bool,
    /// Prepend class and property axioms
    #[arg(long)]
    pub axioms: bool,
    /// Manifest for observation unit and kind
    #[arg(long, value_name = "PATH")]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum QueryFormat {
    Tsv,
    Json,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    /// N-Triples to load
    #[arg(default_value = "-")]
    pub input: String,
    /// Property path such as kwg-ont:sfWithin/kwg-ont:sfWithin; `*` marks a closure step
    #[arg(long, conflicts_with = "bgp", required_unless_present = "bgp")]
    pub path: Option<String>,
    /// Path endpoint bindings: start=TERM or end=TERM
    #[arg(long, value_name = "END=TERM", requires = "path")]
    pub bind: Vec<String>,
    /// File holding a basic graph pattern query
    #[arg(long, value_name = "PATH")]
    pub bgp: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "tsv")]
    pub format: QueryFormat,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 50_000)]
    pub points: usize,
    #[arg(long, default_value_t = 100)]
    pub regions: usize,
    #[arg(long)]
    pub level: Option<u8>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 5)]
    pub runs: usize,
    /// Omit the itemized mismatch lists
    #[arg(long)]
    pub summary: bool,
}

#[derive(Debug, Subcommand)]
pub enum ShardCmd {
    /// Shard keys covering a region
    Plan {
        #[arg(default_value = "-")]
        input: String,
        #[arg(long, default_value_t = 2)]
        level: u8,
    },
    /// Shards a query region must visit
    Route {
        #[arg(default_value = "-")]
        input: String,
        #[arg(long, value_name = "PATH")]
        map: PathBuf,
    },
    /// Split N-Triples into one file per shard plus global.nt
    Split {
        #[arg(default_value = "-")]
        input: String,
        #[arg(long, value_name = "PATH")]
        map: PathBuf,
        #[arg(long, value_name = "DIR")]
        out_dir: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Runtime,
    /// The reader of our output went away; not reported.
    Closed,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
    pub source: Option<String>,
    pub line: Option<usize>,
}

impl CliError {
    pub fn runtime(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Runtime,
            message: message.into(),
            source: None,
            line: None,
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Usage,
            ..Self::runtime(message)
        }
    }

    pub fn at(mut self, source: &str, line: Option<usize>) -> Self {
        self.source = Some(source.to_string());
        self.line = line;
        self
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Usage => 2,
            ErrorKind::Runtime => 1,
            ErrorKind::Closed => 0,
        }
    }

    pub fn to_json(&self) -> String {
        let mut v = json!({
            "error": match self.kind {
                ErrorKind::Usage => "usage",
                ErrorKind::Runtime | ErrorKind::Closed => "runtime",
            },
            "message": self.message,
        });
        if let Some(s) = &self.source {
            v["input"] = json!(s);
        }
        if let Some(l) = self.line {
            v["line"] = json!(l);
        }
        v.to_string()
    }
}

/// Configuration from the file named by `--config` or `GEOGRID_CONFIG`,
/// then the global flags.
pub fn resolve_config(g: &GlobalArgs) -> Result<RunConfig, CliError> {
    let path = g.config.clone().or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
    let mut c = match path {
        Some(p) => RunConfig::load(&p).map_err(|e| CliError::usage(e.to_string()).at(&p.display().to_string(), e.line))?,
        None => RunConfig::default(),
    };
    if let Some(a) = g.antimeridian {
        c.antimeridian = a;
    }
    if let Some(b) = &g.base {
        c.resource_base = b.clone();
    }
    if let Some(o) = &g.ontology {
        c.ontology_base = o.clone();
    }
    if let Some(d) = g.densify {
        c.densify = d;
    }
    Ok(c)
}

fn run_inner(cli: Cli) -> Result<(), CliError> {
    let config = resolve_config(&cli.global)?;
    if let Some(n) = cli.global.jobs {
        if n == 0 {
            return Err(CliError::usage("--jobs must be at least 1"));
        }
        // fails only if a pool already exists, as in repeated in-process runs
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    commands::dispatch(cli.command, config, cli.global.out.as_deref())
}

/// Parses arguments, runs the command and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind as K;
            return match e.kind() {
                K::DisplayHelp | K::DisplayVersion => {
                    let _ = e.print();
                    0
                }
                K::DisplayHelpOnMissingArgumentOrSubcommand => {
                    let _ = e.print();
                    2
                }
                _ => {
                    let msg = e.render().to_string();
                    let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ").to_string();
                    let _ = writeln!(std::io::stderr(), "{}", CliError::usage(first).to_json());
                    2
                }
            };
        }
    };
    match run_inner(cli) {
        Ok(()) => 0,
        Err(e) => {
            if e.kind != ErrorKind::Closed {
                let _ = writeln!(std::io::stderr(), "{}", e.to_json());
            }
            e.exit_code()
        }
    }
}
