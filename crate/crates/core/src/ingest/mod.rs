//! Table ingestion. Each unified table is parsed into rows, turned into a
//! list of merge statements, and the statements are applied to the graph in
//! one atomic step.
//!
//! Merges are keyed on identifying properties, so applying the same bundle
//! twice leaves the graph unchanged. Rows are sorted before statements are
//! built, which makes node and edge ids independent of file row order.

mod tables;

use std::collections::{BTreeMap, HashMap};
use std::marker::PhantomData;

use serde::Serialize;
use thiserror::Error;

pub use tables::{
    AgentRow, AgentTable, Fields, FlowDirection, Located, MetadataRow, MetadataTable, ReferenceRow, ReferenceTable,
    TableSpec, WorkflowRow, WorkflowTable, FLOW_KINDS, RESERVED_METADATA_KEYS, STAGES,
};

use crate::graph::{Change, Direction, Graph, GraphError, NodeId, PropertyMap, PropertyValue};

/// Identifies nodes by label plus a set of property values. A key with
/// fewer properties than the node's full identity matches every node that
/// agrees on the given ones.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeKey {
    pub label: String,
    pub key: PropertyMap,
}

impl NodeKey {
    pub fn new<'a>(label: &str, key: impl IntoIterator<Item = (&'a str, PropertyValue)>) -> Self {
        NodeKey { label: label.to_string(), key: key.into_iter().map(|(k, v)| (k.to_string(), v)).collect() }
    }
}

impl std::fmt::Display for NodeKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}", self.label)?;
        for (i, (k, v)) in self.key.iter().enumerate() {
            let sep = if i == 0 { " {" } else { ", " };
            write!(f, "{sep}{k}: {}", v.to_json())?;
        }
        if !self.key.is_empty() {
            f.write_str("}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Op {
    /// Match nodes by key or create one; payload properties are then set.
    MergeNode {
        node: NodeKey,
        payload: PropertyMap,
    },
    /// For every matched (src, dst) pair, match an edge of this type or
    /// create one. No match on either side records a row error.
    MergeEdge {
        rel_type: String,
        src: NodeKey,
        dst: NodeKey,
        payload: PropertyMap,
    },
    SetProp {
        target: NodeKey,
        key: String,
        value: PropertyValue,
    },
}

impl Op {
    pub fn merge_node(node: NodeKey) -> Op {
        Op::MergeNode { node, payload: PropertyMap::new() }
    }
}

/// One generated mutation and the input line that produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Statement {
    pub line: usize,
    #[serde(flatten)]
    pub op: Op,
}

/// Statements paired with the table that produced them.
pub type TaggedStatements = Vec<(&'static str, Statement)>;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct RowError {
    pub table: String,
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for RowError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} line {}: {}", self.table, self.line, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IngestSummary {
    pub nodes_created: usize,
    pub nodes_matched: usize,
    pub edges_created: usize,
    pub edges_matched: usize,
    /// Property writes that changed a value, including those on new entities.
    pub props_set: usize,
    pub row_errors: Vec<RowError>,
}

impl IngestSummary {
    pub fn absorb(&mut self, other: IngestSummary) {
        self.nodes_created += other.nodes_created;
        self.nodes_matched += other.nodes_matched;
        self.edges_created += other.edges_created;
        self.edges_matched += other.edges_matched;
        self.props_set += other.props_set;
        self.row_errors.extend(other.row_errors);
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{table} table: {message}")]
    Format { table: String, message: String },
    #[error("unknown table kind {0:?}")]
    UnknownTable(String),
    #[error("integrity failure at {table} line {line}, nothing was applied: {source}")]
    Integrity { table: String, line: usize, source: GraphError },
}

/// Parsed rows (file order) and per-row errors.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTable<R> {
    pub rows: Vec<Located<R>>,
    pub row_errors: Vec<RowError>,
}

pub fn parse_table<T: TableSpec>(csv_text: &str) -> Result<ParsedTable<T::Row>, IngestError> {
    let format = |message: String| IngestError::Format { table: T::NAME.into(), message };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(csv_text.as_bytes());
    let mut records = reader.records();
    let header = match records.next() {
        Some(Ok(h)) => h,
        Some(Err(e)) => return Err(format(e.to_string())),
        None => return Err(format("missing header line".into())),
    };
    if header.iter().ne(T::HEADER.iter().copied()) {
        return Err(format(format!(
            "header must be exactly `{}`, found `{}`",
            T::HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }

    let mut out = ParsedTable { rows: Vec::new(), row_errors: Vec::new() };
    let mut seen: HashMap<String, usize> = HashMap::new();
    for rec in records {
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line() as usize);
                out.row_errors.push(RowError { table: T::NAME.into(), line, message: e.to_string() });
                continue;
            }
        };
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let result = if rec.len() != T::HEADER.len() {
            Err(format!("expected {} fields, found {}", T::HEADER.len(), rec.len()))
        } else {
            T::parse_record(&Fields::new(T::HEADER, &rec)).and_then(|row| match T::unique_key(&row) {
                Some(k) => match seen.get(&k) {
                    Some(first) => Err(format!("duplicates the row on line {first}")),
                    None => {
                        seen.insert(k, line);
                        Ok(row)
                    }
                },
                None => Ok(row),
            })
        };
        match result {
            Ok(row) => out.rows.push(Located { line, row }),
            Err(message) => out.row_errors.push(RowError { table: T::NAME.into(), line, message }),
        }
    }
    Ok(out)
}

/// Statements for a set of rows. Rows are put in canonical order first and
/// repeated operations are dropped, so the result does not depend on the
/// order rows appeared in the file.
pub fn build_statements<T: TableSpec>(rows: &[Located<T::Row>]) -> Vec<Statement> {
    let mut sorted = rows.to_vec();
    sorted.sort_by(|a, b| a.row.partial_cmp(&b.row).unwrap_or(std::cmp::Ordering::Equal).then(a.line.cmp(&b.line)));
    tables::dedup(T::build(&sorted))
}

/// Lazily built lookup tables from (label, key names) to node ids.
#[derive(Default)]
struct KeyIndex {
    by_shape: HashMap<(String, Vec<String>), HashMap<String, Vec<NodeId>>>,
}

fn fingerprint<'a>(values: impl Iterator<Item = Option<&'a PropertyValue>>) -> Option<String> {
    let vals: Option<Vec<serde_json::Value>> = values.map(|v| v.map(PropertyValue::to_json)).collect();
    vals.map(|v| serde_json::Value::Array(v).to_string())
}

impl KeyIndex {
    fn find(&mut self, graph: &Graph, key: &NodeKey) -> Vec<NodeId> {
        let names: Vec<String> = key.key.keys().cloned().collect();
        let index = self.by_shape.entry((key.label.clone(), names.clone())).or_insert_with(|| {
            let mut m: HashMap<String, Vec<NodeId>> = HashMap::new();
            for id in graph.nodes_with_label(&key.label) {
                let node = graph.node(id).expect("indexed node exists");
                if let Some(fp) = fingerprint(names.iter().map(|n| node.prop(n))) {
                    m.entry(fp).or_default().push(id);
                }
            }
            m
        });
        let fp = fingerprint(key.key.values().map(Some)).expect("all values present");
        index.get(&fp).cloned().unwrap_or_default()
    }

    fn node_created(&mut self, graph: &Graph, id: NodeId) {
        let node = graph.node(id).expect("just created");
        for ((label, names), m) in &mut self.by_shape {
            if node.has_label(label) {
                if let Some(fp) = fingerprint(names.iter().map(|n| node.prop(n))) {
                    m.entry(fp).or_default().push(id);
                }
            }
        }
    }

    fn property_changed(&mut self, graph: &Graph, id: NodeId, key: &str) {
        let node = graph.node(id).expect("node exists");
        self.by_shape.retain(|(label, names), _| !(node.has_label(label) && names.iter().any(|n| n == key)));
    }
}

struct Applier<'g> {
    graph: &'g mut Graph,
    index: KeyIndex,
    summary: IngestSummary,
}

impl Applier<'_> {
    fn set_node_prop(&mut self, id: NodeId, key: &str, value: &PropertyValue) -> Result<(), GraphError> {
        if self.graph.node(id).and_then(|n| n.prop(key)) == Some(value) {
            return Ok(());
        }
        self.graph.update(id.into(), Change::SetProperty(key.to_string(), value.clone()))?;
        self.summary.props_set += 1;
        self.index.property_changed(self.graph, id, key);
        Ok(())
    }

    fn apply(&mut self, table: &str, st: &Statement) -> Result<(), GraphError> {
        let row_error = |summary: &mut IngestSummary, message: String| {
            summary.row_errors.push(RowError { table: table.to_string(), line: st.line, message })
        };
        match &st.op {
            Op::MergeNode { node, payload } => {
                let found = self.index.find(self.graph, node);
                if found.is_empty() {
                    let mut props = node.key.clone();
                    props.extend(payload.iter().map(|(k, v)| (k.clone(), v.clone())));
                    let n = props.len();
                    let id = self.graph.create_node([node.label.as_str()], props)?;
                    self.index.node_created(self.graph, id);
                    self.summary.nodes_created += 1;
                    self.summary.props_set += n;
                } else {
                    self.summary.nodes_matched += found.len();
                    for id in found {
                        for (k, v) in payload {
                            self.set_node_prop(id, k, v)?;
                        }
                    }
                }
            }
            Op::MergeEdge { rel_type, src, dst, payload } => {
                let srcs = self.index.find(self.graph, src);
                let dsts = self.index.find(self.graph, dst);
                if srcs.is_empty() || dsts.is_empty() {
                    let missing = if srcs.is_empty() { src } else { dst };
                    row_error(&mut self.summary, format!("{rel_type} edge skipped: no node matches {missing}"));
                    return Ok(());
                }
                for &s in &srcs {
                    let existing = self.graph.neighbors(s, Direction::Out, Some(rel_type))?;
                    for &d in &dsts {
                        let matched: Vec<_> = existing.iter().filter(|(_, n)| *n == d).map(|(e, _)| *e).collect();
                        if matched.is_empty() {
                            self.graph.create_edge(rel_type, s, d, payload.clone())?;
                            self.summary.edges_created += 1;
                            self.summary.props_set += payload.len();
                        }
                        self.summary.edges_matched += matched.len();
                        for e in matched {
                            for (k, v) in payload {
                                if self.graph.edge(e).and_then(|x| x.prop(k)) != Some(v) {
                                    self.graph.update(e.into(), Change::SetProperty(k.clone(), v.clone()))?;
                                    self.summary.props_set += 1;
                                }
                            }
                        }
                    }
                }
            }
            Op::SetProp { target, key, value } => {
                let found = self.index.find(self.graph, target);
                if found.is_empty() {
                    row_error(&mut self.summary, format!("property {key} not set: no node matches {target}"));
                }
                for id in found {
                    self.set_node_prop(id, key, value)?;
                }
            }
        }
        Ok(())
    }
}

/// Applies statements atomically: on an integrity failure the graph is left
/// exactly as it was. Statements are grouped by the table that produced
/// them for error reporting.
pub fn apply_statements(graph: &mut Graph, statements: &[(&str, Statement)]) -> Result<IngestSummary, IngestError> {
    let mut staging = graph.clone();
    let mut applier = Applier { graph: &mut staging, index: KeyIndex::default(), summary: IngestSummary::default() };
    for (table, st) in statements {
        applier.apply(table, st).map_err(|source| IngestError::Integrity {
            table: table.to_string(),
            line: st.line,
            source,
        })?;
    }
    let summary = applier.summary;
    *graph = staging;
    Ok(summary)
}

/// Object-safe face of a [`TableSpec`].
trait DynTable {
    fn name(&self) -> &'static str;
    fn statements(&self, csv_text: &str) -> Result<(Vec<Statement>, Vec<RowError>), IngestError>;
}

struct Registered<T>(PhantomData<T>);

impl<T: TableSpec> DynTable for Registered<T> {
    fn name(&self) -> &'static str {
        T::NAME
    }

    fn statements(&self, csv_text: &str) -> Result<(Vec<Statement>, Vec<RowError>), IngestError> {
        let parsed = parse_table::<T>(csv_text)?;
        Ok((build_statements::<T>(&parsed.rows), parsed.row_errors))
    }
}

/// Table kinds in application order.
pub struct IngestPipeline {
    tables: Vec<Box<dyn DynTable>>,
}

impl Default for IngestPipeline {
    fn default() -> Self {
        let mut p = IngestPipeline { tables: Vec::new() };
        p.register::<WorkflowTable>().register::<MetadataTable>().register::<AgentTable>().register::<ReferenceTable>();
        p
    }
}

impl IngestPipeline {
    /// Appends a table kind; it is applied after every kind registered
    /// before it.
    pub fn register<T: TableSpec>(&mut self) -> &mut Self {
        self.tables.retain(|t| t.name() != T::NAME);
        self.tables.push(Box::new(Registered::<T>(PhantomData)));
        self
    }

    pub fn table_names(&self) -> Vec<&'static str> {
        self.tables.iter().map(|t| t.name()).collect()
    }

    /// Parses and builds every table in `bundle` (keyed by table name)
    /// without touching a graph. Any format error aborts.
    pub fn plan(&self, bundle: &BTreeMap<String, String>) -> Result<(TaggedStatements, Vec<RowError>), IngestError> {
        if let Some(unknown) = bundle.keys().find(|k| !self.tables.iter().any(|t| t.name() == *k)) {
            return Err(IngestError::UnknownTable(unknown.clone()));
        }
        let mut statements = Vec::new();
        let mut errors = Vec::new();
        for table in &self.tables {
            if let Some(text) = bundle.get(table.name()) {
                let (st, errs) = table.statements(text)?;
                statements.extend(st.into_iter().map(|s| (table.name(), s)));
                errors.extend(errs);
            }
        }
        Ok((statements, errors))
    }

    /// Parses, builds and applies a bundle in table order as one atomic
    /// step.
    pub fn ingest(&self, graph: &mut Graph, bundle: &BTreeMap<String, String>) -> Result<IngestSummary, IngestError> {
        let (statements, parse_errors) = self.plan(bundle)?;
        let mut summary = apply_statements(graph, &statements)?;
        summary.row_errors.extend(parse_errors);
        summary.row_errors.sort();
        Ok(summary)
    }
}

/// [`IngestPipeline::ingest`] with the four builtin tables.
pub fn ingest_bundle(graph: &mut Graph, bundle: &BTreeMap<String, String>) -> Result<IngestSummary, IngestError> {
    IngestPipeline::default().ingest(graph, bundle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Quantity;
    use crate::ontology::{builtin_schema, validate_graph};

    const WF_HEADER: &str =
        "workflow_id,step_index,activity_name,stage,direction,flow_name,flow_kind,amount,unit,unc_kind,unc_a,unc_b";

    fn wf(rows: &[&str]) -> String {
        let mut s = String::from(WF_HEADER);
        for r in rows {
            s.push('\n');
            s.push_str(r);
        }
        s.push('\n');
        s
    }

    fn bundle(pairs: &[(&str, String)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    #[test]
    fn header_only_and_bad_rows() {
        let p = parse_table::<WorkflowTable>(&wf(&[])).unwrap();
        assert!(p.rows.is_empty() && p.row_errors.is_empty());

        let p = parse_table::<WorkflowTable>(&wf(&[
            "W1,0,mix,production,input,glucose,intermediate,1.5,kg,,,",
            "W1,1,ferment,production,output,acid,product,abc,kg,,,",
            "W1,1,ferment,production,input,glucose,intermediate,2,kg,uniform,1,3",
        ]))
        .unwrap();
        assert_eq!(p.rows.len(), 2);
        assert_eq!(p.row_errors.len(), 1);
        assert_eq!(p.row_errors[0].line, 3);
        assert!(p.row_errors[0].message.contains("amount"));
    }

    #[test]
    fn wrong_header_is_fatal() {
        let err = parse_table::<MetadataTable>("workflow_id,k,value\nW1,region,CA\n").unwrap_err();
        assert!(matches!(err, IngestError::Format { .. }));
    }

    #[test]
    fn metadata_row() {
        let p = parse_table::<MetadataTable>("workflow_id,key,value\nW1,region,CA-BC\n").unwrap();
        assert_eq!(
            p.rows[0].row,
            MetadataRow { workflow_id: "W1".into(), key: "region".into(), value: "CA-BC".into() }
        );
        let p = parse_table::<MetadataTable>("workflow_id,key,value\nW1,functional_unit_amount,lots\n").unwrap();
        assert_eq!(p.row_errors.len(), 1);
    }

    #[test]
    fn one_workflow_row_statements() {
        let p =
            parse_table::<WorkflowTable>(&wf(&["W1,0,fermentation,production,output,succinic acid,product,1.0,kg,,,"]))
                .unwrap();
        let st = build_statements::<WorkflowTable>(&p.rows);
        let ops: Vec<String> = st
            .iter()
            .map(|s| match &s.op {
                Op::MergeNode { node, .. } => format!("node {}", node.label),
                Op::MergeEdge { rel_type, .. } => format!("edge {rel_type}"),
                Op::SetProp { key, .. } => format!("set {key}"),
            })
            .collect();
        assert_eq!(ops, ["node Workflow", "node Activity", "node Flow", "edge HAS_STEP", "edge HAS_OUTPUT"]);
        let Op::MergeEdge { payload, .. } = &st[4].op else { panic!() };
        assert_eq!(payload["amount"], Quantity::new(1.0, "kg").into());
        assert!(build_statements::<WorkflowTable>(&[]).is_empty());
    }

    #[test]
    fn next_edges_follow_sorted_steps() {
        let p = parse_table::<WorkflowTable>(&wf(&[
            "W1,5,b,,input,x,elementary,1,kg,,,",
            "W1,0,a,,input,x,elementary,1,kg,,,",
            "W1,5,b,,output,y,product,1,kg,,,",
        ]))
        .unwrap();
        let st = build_statements::<WorkflowTable>(&p.rows);
        let next = st.iter().filter(|s| matches!(&s.op, Op::MergeEdge { rel_type, .. } if rel_type == "NEXT")).count();
        assert_eq!(next, 1);
    }

    #[test]
    fn apply_twice_matches() {
        let text = wf(&[
            "W1,0,mix,production,input,glucose,intermediate,1.5,kg,,,",
            "W1,1,ferment,production,output,acid,product,0.5,kg,normal,0.5,0.02",
        ]);
        let b = bundle(&[("workflow", text)]);
        let mut g = Graph::new();
        let first = ingest_bundle(&mut g, &b).unwrap();
        assert_eq!(first.nodes_created, 5);
        let dump = g.to_dump();
        let second = ingest_bundle(&mut g, &b).unwrap();
        assert_eq!(second.nodes_created, 0);
        assert_eq!(second.edges_created, 0);
        assert_eq!(second.props_set, 0);
        assert_eq!(second.nodes_matched, first.nodes_created);
        assert_eq!(second.edges_matched, first.edges_created);
        assert_eq!(g.to_dump(), dump);
        assert_eq!(validate_graph(&g, &builtin_schema()), vec![]);
    }

    #[test]
    fn empty_inputs() {
        let mut g = Graph::new();
        assert_eq!(apply_statements(&mut g, &[]).unwrap(), IngestSummary::default());
        assert_eq!(ingest_bundle(&mut g, &BTreeMap::new()).unwrap(), IngestSummary::default());
    }

    #[test]
    fn missing_workflow_defers_edge() {
        let b = bundle(&[
            ("workflow", wf(&["W1,0,mix,,input,glucose,intermediate,1,kg,,,"])),
            ("reference", "workflow_id,reference_id,author,title,year,doi\nW9,R1,Doe,\"A, B\",2020,\n".into()),
        ]);
        let mut g = Graph::new();
        let s = ingest_bundle(&mut g, &b).unwrap();
        assert_eq!(g.label_cardinality("Reference"), 1);
        assert_eq!(g.rel_type_counts().get("HAS_REFERENCE"), None);
        assert_eq!(s.row_errors.len(), 1);
        assert_eq!(s.row_errors[0].table, "reference");
        assert_eq!(s.row_errors[0].line, 2);
    }

    #[test]
    fn format_error_aborts_bundle() {
        let b = bundle(&[
            ("workflow", wf(&["W1,0,mix,,input,glucose,intermediate,1,kg,,,"])),
            ("agent", "bad,header\n".into()),
        ]);
        let mut g = Graph::new();
        assert!(ingest_bundle(&mut g, &b).is_err());
        assert_eq!(g.node_count(), 0);
        let b = bundle(&[("recipes", String::new())]);
        assert!(matches!(ingest_bundle(&mut g, &b), Err(IngestError::UnknownTable(_))));
    }

    #[test]
    fn integrity_failure_rolls_back() {
        let mut g = Graph::new();
        g.create_node(["Workflow"], [("id".to_string(), "W1".into())].into()).unwrap();
        let before = g.to_dump();
        let statements = [
            ("t", Statement { line: 2, op: Op::merge_node(NodeKey::new("Flow", [("name", "x".into())])) }),
            (
                "t",
                Statement {
                    line: 3,
                    op: Op::SetProp {
                        target: NodeKey::new("Workflow", [("id", "W1".into())]),
                        key: String::new(),
                        value: "v".into(),
                    },
                },
            ),
        ];
        let err = apply_statements(&mut g, &statements).unwrap_err();
        assert!(matches!(err, IngestError::Integrity { line: 3, .. }));
        assert_eq!(g.to_dump(), before);
    }

    #[test]
    fn statements_serialize() {
        let st = Statement { line: 4, op: Op::merge_node(NodeKey::new("Location", [("code", "CA-BC".into())])) };
        assert_eq!(
            serde_json::to_string(&st).unwrap(),
            r#"{"line":4,"op":"merge_node","node":{"label":"Location","key":{"code":"CA-BC"}},"payload":{}}"#
        );
    }
}
