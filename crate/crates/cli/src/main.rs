//! `lcag`: ingest inventory tables into a graph store file, then harmonize,
//! validate, query, score and export it.
//!
//! Exit status is 0 on success, 1 when `--strict` finds data problems (or a
//! query fails on the data), and 2 for usage, format and I/O errors.

mod config;
mod store;

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{ArgGroup, Parser, Subcommand};
use lcag_core::graph::{from_triples, parse_ntriples, to_triples, write_ntriples, Graph};
use lcag_core::harmonize::{detect_conflicts, parse_mappings, translate_graph};
use lcag_core::ingest::{ingest_bundle, IngestError};
use lcag_core::ontology::{builtin_schema, parse_schema, validate_graph, SchemaDef};
use lcag_core::quality::{fair_report, score_quality};
use lcag_core::query::{run_query, QueryError};

use config::{CliConfig, Format};

#[derive(Parser)]
#[command(name = "lcag", version, about = "Life-cycle inventory graph store")]
struct Cli {
    /// Store file (overrides the config file and LCAG_STORE).
    #[arg(long, global = true)]
    store: Option<PathBuf>,
    /// Config file [default: ./.lcag.conf when present].
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Merge unified tables into the store, creating it if needed.
    #[command(group(ArgGroup::new("tables").required(true).multiple(true)))]
    Ingest {
        /// Workflow table: steps and their exchanges.
        #[arg(long, group = "tables")]
        workflow: Option<PathBuf>,
        /// Metadata table: region, functional unit and free-form keys.
        #[arg(long, group = "tables")]
        metadata: Option<PathBuf>,
        /// Agent table: who performs each workflow.
        #[arg(long, group = "tables")]
        agent: Option<PathBuf>,
        /// Reference table: publications behind each workflow.
        #[arg(long, group = "tables")]
        reference: Option<PathBuf>,
        /// Refuse to write the store if any row is rejected.
        #[arg(long)]
        strict: bool,
    },
    /// List schema violations.
    Validate {
        /// Schema file, else the config file's, else the builtin schema.
        #[arg(long)]
        schema: Option<PathBuf>,
        /// Exit 1 when there are violations.
        #[arg(long)]
        strict: bool,
    },
    /// Run a pattern query.
    #[command(group(ArgGroup::new("source").required(true)))]
    Query {
        /// Query text.
        #[arg(short = 'e', long = "expr", group = "source")]
        expr: Option<String>,
        /// File holding the query text.
        #[arg(short = 'f', long = "file", group = "source")]
        file: Option<PathBuf>,
        /// Output format; defaults to the config file's, else csv.
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Data-quality scores.
    Score {
        /// Schema file, else the config file's, else the builtin schema.
        #[arg(long)]
        schema: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// FAIR readiness report.
    Fair {
        /// Schema file, else the config file's, else the builtin schema.
        #[arg(long)]
        schema: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Translate the store into the canonical vocabulary, keeping a .bak copy.
    Harmonize {
        /// Mapping table CSV; defaults to the config file's `mappings`.
        #[arg(long)]
        mappings: Option<PathBuf>,
        /// Schema file, else the config file's, else the builtin schema.
        #[arg(long)]
        schema: Option<PathBuf>,
    },
    /// Write the store as N-Triples.
    ExportTriples {
        /// N-Triples file to write.
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
    },
    /// Replace the store with a graph read from N-Triples, keeping a .bak copy.
    ImportTriples {
        /// N-Triples file to read.
        #[arg(short = 'i', long = "input")]
        input: PathBuf,
    },
    /// Node, edge, label and relationship counts.
    Stats,
}

struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Failure { code: 2, error }
    }
}

fn data_failure(msg: impl Into<String>) -> Failure {
    Failure { code: 1, error: anyhow!(msg.into()) }
}

type Outcome = Result<(), Failure>;

fn open_store(cfg: &CliConfig) -> Result<Graph, Failure> {
    if !cfg.store_path.exists() {
        return Err(anyhow!(
            "store {} does not exist\nhint: run `lcag ingest` first to create it",
            cfg.store_path.display()
        )
        .into());
    }
    Ok(store::load(&cfg.store_path)?)
}

fn read(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn schema(flag: Option<PathBuf>, cfg: &CliConfig) -> anyhow::Result<SchemaDef> {
    match flag.or_else(|| cfg.schema_path.clone()) {
        None => Ok(builtin_schema()),
        Some(p) => parse_schema(&read(&p)?).with_context(|| format!("in schema {}", p.display())),
    }
}

fn out() -> io::StdoutLock<'static> {
    io::stdout().lock()
}

fn ingest(cfg: &CliConfig, tables: [(&str, Option<PathBuf>); 4], strict: bool) -> Outcome {
    let mut bundle = BTreeMap::new();
    for (name, path) in tables {
        if let Some(p) = path {
            bundle.insert(name.to_string(), read(&p)?);
        }
    }
    let mut graph = if cfg.store_path.exists() { store::load(&cfg.store_path)? } else { Graph::new() };
    let summary = match ingest_bundle(&mut graph, &bundle) {
        Ok(s) => s,
        Err(e @ IngestError::Integrity { .. }) => return Err(data_failure(e.to_string())),
        Err(e) => return Err(anyhow!(e).into()),
    };
    for e in &summary.row_errors {
        eprintln!("rejected {e}");
    }
    if strict && !summary.row_errors.is_empty() {
        return Err(data_failure(format!("{} row(s) rejected; store left unchanged", summary.row_errors.len())));
    }
    store::save(&cfg.store_path, &graph)?;
    writeln!(
        out(),
        "nodes created {}, matched {}\nedges created {}, matched {}\nproperties set {}\nrows rejected {}",
        summary.nodes_created,
        summary.nodes_matched,
        summary.edges_created,
        summary.edges_matched,
        summary.props_set,
        summary.row_errors.len()
    )
    .map_err(anyhow::Error::from)?;
    Ok(())
}

fn validate(cfg: &CliConfig, schema_flag: Option<PathBuf>, strict: bool) -> Outcome {
    let schema = schema(schema_flag, cfg)?;
    let graph = open_store(cfg)?;
    let violations = validate_graph(&graph, &schema);
    let mut o = out();
    for v in &violations {
        writeln!(o, "{v}").map_err(anyhow::Error::from)?;
    }
    eprintln!("{} violation(s)", violations.len());
    if strict && !violations.is_empty() {
        return Err(data_failure("the store does not conform to the schema"));
    }
    Ok(())
}

fn query(cfg: &CliConfig, text: String, format: Format) -> Outcome {
    let graph = open_store(cfg)?;
    let table = match run_query(&text, &graph) {
        Ok(t) => t,
        Err(e @ QueryError::Runtime(_)) => return Err(data_failure(e.to_string())),
        Err(e) => return Err(anyhow!(e).into()),
    };
    let rendered = match format {
        Format::Csv => table.to_csv(),
        Format::Json => table.to_json_lines(),
    };
    out().write_all(rendered.as_bytes()).map_err(anyhow::Error::from)?;
    Ok(())
}

fn harmonize(cfg: &CliConfig, mappings: Option<PathBuf>, schema_flag: Option<PathBuf>) -> Outcome {
    let path = mappings
        .or_else(|| cfg.mappings_path.clone())
        .ok_or_else(|| anyhow!("no mapping table: pass --mappings or set `mappings` in the config file"))?;
    let table = parse_mappings(&read(&path)?).with_context(|| format!("in mappings {}", path.display()))?;
    let schema = schema(schema_flag, cfg)?;
    let conflicts = detect_conflicts(&table, &schema);
    if !conflicts.is_empty() {
        for c in &conflicts {
            eprintln!("{c}");
        }
        return Err(anyhow!("{} conflict(s) in {}; store left unchanged", conflicts.len(), path.display()).into());
    }
    let graph = open_store(cfg)?;
    let (translated, report) = translate_graph(&graph, &table, &schema).map_err(anyhow::Error::from)?;
    for (kind, term) in &report.untranslated {
        eprintln!("untranslated {kind} {term}");
    }
    for c in &report.collisions {
        eprintln!("collision {c}");
    }
    if let Some(bak) = store::backup(&cfg.store_path)? {
        eprintln!("previous store kept at {}", bak.display());
    }
    store::save(&cfg.store_path, &translated)?;
    let mut o = out();
    for (rule, n) in &report.rewritten {
        writeln!(o, "{rule}: {n}").map_err(anyhow::Error::from)?;
    }
    writeln!(o, "edges reversed: {}", report.reversed_edges).map_err(anyhow::Error::from)?;
    Ok(())
}

fn export_triples(cfg: &CliConfig, output: &Path) -> Outcome {
    let graph = open_store(cfg)?;
    let triples = to_triples(&graph);
    std::fs::write(output, write_ntriples(&triples)).with_context(|| format!("cannot write {}", output.display()))?;
    eprintln!("{} triples written to {}", triples.len(), output.display());
    Ok(())
}

fn import_triples(cfg: &CliConfig, input: &Path) -> Outcome {
    let triples = parse_ntriples(&read(input)?).with_context(|| format!("in {}", input.display()))?;
    let graph = from_triples(&triples).with_context(|| format!("in {}", input.display()))?;
    if let Some(bak) = store::backup(&cfg.store_path)? {
        eprintln!("previous store kept at {}", bak.display());
    }
    store::save(&cfg.store_path, &graph)?;
    writeln!(out(), "nodes {}\nedges {}", graph.node_count(), graph.edge_count()).map_err(anyhow::Error::from)?;
    Ok(())
}

fn stats(cfg: &CliConfig) -> Outcome {
    let graph = open_store(cfg)?;
    let mut text = format!(
        "nodes: {}\nedges: {}\nworkflows: {}\nlabels:\n",
        graph.node_count(),
        graph.edge_count(),
        graph.label_cardinality("Workflow")
    );
    for (l, n) in graph.label_counts() {
        text.push_str(&format!("  {l}: {n}\n"));
    }
    text.push_str("relationships:\n");
    for (r, n) in graph.rel_type_counts() {
        text.push_str(&format!("  {r}: {n}\n"));
    }
    out().write_all(text.as_bytes()).map_err(anyhow::Error::from)?;
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    let file = config::load_config(cli.config.as_deref())?;
    let cfg = config::resolve(cli.store, file, std::env::var(config::STORE_ENV).ok())?;
    match cli.command {
        Command::Ingest { workflow, metadata, agent, reference, strict } => ingest(
            &cfg,
            [("workflow", workflow), ("metadata", metadata), ("agent", agent), ("reference", reference)],
            strict,
        ),
        Command::Validate { schema, strict } => validate(&cfg, schema, strict),
        Command::Query { expr, file, format } => {
            let text = match (expr, file) {
                (Some(e), _) => e,
                (None, Some(f)) => read(&f)?,
                (None, None) => unreachable!("clap requires one source"),
            };
            query(&cfg, text, format.unwrap_or(cfg.format))
        }
        Command::Score { schema: s, json } => {
            let report = score_quality(&open_store(&cfg)?, &schema(s, &cfg)?);
            let text = if json {
                serde_json::to_string(&report).map_err(anyhow::Error::from)? + "\n"
            } else {
                report.to_string()
            };
            out().write_all(text.as_bytes()).map_err(anyhow::Error::from)?;
            Ok(())
        }
        Command::Fair { schema: s, json } => {
            let report = fair_report(&open_store(&cfg)?, &schema(s, &cfg)?);
            let text = if json {
                serde_json::to_string(&report).map_err(anyhow::Error::from)? + "\n"
            } else {
                report.to_string()
            };
            out().write_all(text.as_bytes()).map_err(anyhow::Error::from)?;
            Ok(())
        }
        Command::Harmonize { mappings, schema } => harmonize(&cfg, mappings, schema),
        Command::ExportTriples { output } => export_triples(&cfg, &output),
        Command::ImportTriples { input } => import_triples(&cfg, &input),
        Command::Stats => stats(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}
