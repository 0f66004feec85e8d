//! Vocabulary harmonization: rewriting graphs expressed in other inventory
//! ontologies into the canonical schema through explicit mapping tables.
//!
//! Mapping tables are CSV with the header
//! `source_ontology,source_term,kind,canonical_term,direction`. `kind` is
//! `class`, `relation` or `property`; `direction` is `forward` or
//! `reverse` for relations and blank otherwise. A reverse relation mapping
//! swaps the edge endpoints, e.g. `flow -[Input_Of]-> activity` becomes
//! `activity -[HAS_INPUT]-> flow`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::graph::{Graph, GraphError, PropertyMap};
use crate::ontology::SchemaDef;

pub const MAPPING_HEADER: [&str; 5] = ["source_ontology", "source_term", "kind", "canonical_term", "direction"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TermKind {
    Class,
    Relation,
    Property,
}

impl TermKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TermKind::Class => "class",
            TermKind::Relation => "relation",
            TermKind::Property => "property",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "class" => Some(TermKind::Class),
            "relation" => Some(TermKind::Relation),
            "property" => Some(TermKind::Property),
            _ => None,
        }
    }
}

impl fmt::Display for TermKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MappingDirection {
    Forward,
    Reverse,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct MappingEntry {
    pub source_ontology: String,
    pub source_term: String,
    pub kind: TermKind,
    pub canonical_term: String,
    pub direction: MappingDirection,
}

impl MappingEntry {
    pub fn new(ontology: &str, term: &str, kind: TermKind, canonical: &str, direction: MappingDirection) -> Self {
        MappingEntry {
            source_ontology: ontology.into(),
            source_term: term.into(),
            kind,
            canonical_term: canonical.into(),
            direction,
        }
    }
}

impl fmt::Display for MappingEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{} ({}) -> {}", self.source_ontology, self.source_term, self.kind, self.canonical_term)?;
        if self.direction == MappingDirection::Reverse {
            f.write_str(" [reverse]")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MappingTable {
    pub entries: Vec<MappingEntry>,
}

impl MappingTable {
    /// Wraps entries without checking them; see [`detect_conflicts`].
    pub fn from_entries(entries: Vec<MappingEntry>) -> Self {
        MappingTable { entries }
    }

    pub fn ontologies(&self) -> BTreeSet<&str> {
        self.entries.iter().map(|e| e.source_ontology.as_str()).collect()
    }

    pub fn lookup(&self, ontology: &str, term: &str, kind: TermKind) -> Option<&MappingEntry> {
        self.entries.iter().find(|e| e.source_ontology == ontology && e.source_term == term && e.kind == kind)
    }

    /// The subset of entries belonging to one source ontology.
    pub fn for_ontology(&self, ontology: &str) -> MappingTable {
        MappingTable { entries: self.entries.iter().filter(|e| e.source_ontology == ontology).cloned().collect() }
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(MAPPING_HEADER).expect("in-memory write");
        for e in &self.entries {
            let dir = match (e.kind, e.direction) {
                (TermKind::Relation, MappingDirection::Forward) => "forward",
                (TermKind::Relation, MappingDirection::Reverse) => "reverse",
                _ => "",
            };
            w.write_record([e.source_ontology.as_str(), &e.source_term, e.kind.as_str(), &e.canonical_term, dir])
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

const BUILTIN_MAPPINGS: &str = "\
source_ontology,source_term,kind,canonical_term,direction
Wang2022,hasInputFlow,relation,HAS_INPUT,forward
Wang2022,hasOutputFlow,relation,HAS_OUTPUT,forward
Wang2022,Process,class,Activity,
Zhang2015,hasInflow,relation,HAS_INPUT,forward
Zhang2015,hasOutflow,relation,HAS_OUTPUT,forward
Zhang2015,hasBoundary,property,boundary,
Kuczenski2016,hasInputs,relation,HAS_INPUT,forward
Kuczenski2016,hasOutputs,relation,HAS_OUTPUT,forward
LciO,Input_Of,relation,HAS_INPUT,reverse
LciO,Output_Of,relation,HAS_OUTPUT,reverse
LciO,has_source,relation,HAS_OUTPUT,reverse
LciO,has_Destination,relation,HAS_INPUT,reverse
Ghose2022,performs,relation,PERFORMS,forward
Ghose2022,isInputOf,relation,HAS_INPUT,reverse
Saad2023,Has_flow,relation,HAS_OUTPUT,forward
Saad2023,UnitProcess,class,Activity,
Saad2023,IntermediateFlow,class,Flow,
";

/// Mappings from the surveyed inventory ontologies into the builtin schema.
pub fn builtin_mappings() -> MappingTable {
    parse_mappings(BUILTIN_MAPPINGS).expect("builtin mappings parse")
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MappingError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: duplicate mapping for {ontology}:{term} ({kind})")]
    Duplicate { line: usize, ontology: String, term: String, kind: TermKind },
    #[error("line {line}: direction 'reverse' is only valid for relation mappings")]
    ReverseOnNonRelation { line: usize },
}

pub fn parse_mappings(text: &str) -> Result<MappingTable, MappingError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(text.as_bytes());
    let mut records = reader.records();
    let syntax = |line: usize, message: String| MappingError::Syntax { line, message };
    let header = match records.next() {
        Some(r) => r.map_err(|e| syntax(1, e.to_string()))?,
        None => return Err(syntax(1, "missing header".into())),
    };
    if header.iter().map(str::trim).ne(MAPPING_HEADER) {
        return Err(syntax(1, format!("header must be {}", MAPPING_HEADER.join(","))));
    }

    let mut table = MappingTable::default();
    let mut keys = BTreeSet::new();
    for rec in records {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            syntax(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        if rec.len() != MAPPING_HEADER.len() {
            return Err(syntax(line, format!("expected 5 fields, found {}", rec.len())));
        }
        let field = |i: usize| rec[i].trim();
        for (i, name) in MAPPING_HEADER.iter().enumerate().take(4) {
            if field(i).is_empty() {
                return Err(syntax(line, format!("{name} must not be empty")));
            }
        }
        let kind = TermKind::parse(field(2))
            .ok_or_else(|| syntax(line, format!("unknown kind {:?} (class|relation|property)", field(2))))?;
        let direction = match field(4) {
            "" | "forward" => MappingDirection::Forward,
            "reverse" if kind == TermKind::Relation => MappingDirection::Reverse,
            "reverse" => return Err(MappingError::ReverseOnNonRelation { line }),
            other => return Err(syntax(line, format!("unknown direction {other:?}"))),
        };
        let entry = MappingEntry::new(field(0), field(1), kind, field(3), direction);
        if !keys.insert((entry.source_ontology.clone(), entry.source_term.clone(), kind)) {
            return Err(MappingError::Duplicate {
                line,
                ontology: entry.source_ontology,
                term: entry.source_term,
                kind,
            });
        }
        table.entries.push(entry);
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConflictKind {
    DuplicateSourceTerm,
    DivergentTargets,
    UnknownCanonicalTerm,
}

impl fmt::Display for ConflictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConflictKind::DuplicateSourceTerm => "duplicate_source_term",
            ConflictKind::DivergentTargets => "divergent_targets",
            ConflictKind::UnknownCanonicalTerm => "unknown_canonical_term",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Conflict {
    pub kind: ConflictKind,
    pub entries: Vec<MappingEntry>,
    pub detail: String,
}

impl fmt::Display for Conflict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.detail)
    }
}

fn canonical_exists(schema: &SchemaDef, kind: TermKind, term: &str) -> bool {
    match kind {
        TermKind::Class => schema.has_class(term),
        TermKind::Relation => schema.has_relation(term),
        TermKind::Property => schema.has_property_key(term),
    }
}

/// Lists every incoherence in `mappings` with respect to `schema`.
pub fn detect_conflicts(mappings: &MappingTable, schema: &SchemaDef) -> Vec<Conflict> {
    let mut out = Vec::new();

    let mut by_key: BTreeMap<(&str, &str, TermKind), Vec<&MappingEntry>> = BTreeMap::new();
    let mut by_term: BTreeMap<(&str, TermKind), Vec<&MappingEntry>> = BTreeMap::new();
    for e in &mappings.entries {
        by_key.entry((&e.source_ontology, &e.source_term, e.kind)).or_default().push(e);
        by_term.entry((&e.source_term, e.kind)).or_default().push(e);
    }
    for ((ont, term, kind), group) in by_key {
        if group.len() > 1 {
            out.push(Conflict {
                kind: ConflictKind::DuplicateSourceTerm,
                entries: group.into_iter().cloned().collect(),
                detail: format!("{ont}:{term} ({kind}) is mapped more than once"),
            });
        }
    }
    for ((term, kind), group) in by_term {
        let targets: BTreeSet<(&str, MappingDirection)> =
            group.iter().map(|e| (e.canonical_term.as_str(), e.direction)).collect();
        if targets.len() > 1 {
            let list: Vec<String> = targets
                .iter()
                .map(|(t, d)| match d {
                    MappingDirection::Forward => t.to_string(),
                    MappingDirection::Reverse => format!("{t} (reverse)"),
                })
                .collect();
            out.push(Conflict {
                kind: ConflictKind::DivergentTargets,
                entries: group.into_iter().cloned().collect(),
                detail: format!("{term} ({kind}) maps to {}", list.join(", ")),
            });
        }
    }
    for e in &mappings.entries {
        if !canonical_exists(schema, e.kind, &e.canonical_term) {
            out.push(Conflict {
                kind: ConflictKind::UnknownCanonicalTerm,
                entries: vec![e.clone()],
                detail: format!("{} {:?} is not in schema {}", e.kind, e.canonical_term, schema.version),
            });
        }
    }
    out.sort();
    out
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TranslateError {
    #[error("mapping target(s) not in schema: {}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
    UnknownCanonicalTerm(Vec<MappingEntry>),
    #[error("rebuilding translated graph failed: {0}")]
    Graph(#[from] GraphError),
}

/// What a translation did, and which terms it could not resolve.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TranslationReport {
    /// Non-canonical terms left untouched, by kind.
    pub untranslated: BTreeSet<(TermKind, String)>,
    /// Source term rewrites that were applied, with how often.
    pub rewritten: BTreeMap<String, usize>,
    pub reversed_edges: usize,
    /// Source labels or keys dropped because their canonical name was
    /// already present on the same entity.
    pub collisions: Vec<String>,
}

impl TranslationReport {
    pub fn is_complete(&self) -> bool {
        self.untranslated.is_empty()
    }
}

struct Resolver<'a> {
    schema: &'a SchemaDef,
    map: HashMap<(TermKind, &'a str), &'a MappingEntry>,
}

enum Resolved<'a> {
    Canonical,
    Mapped(&'a MappingEntry),
    Unmapped,
}

impl<'a> Resolver<'a> {
    fn new(mappings: &'a MappingTable, schema: &'a SchemaDef) -> Self {
        let mut map = HashMap::new();
        for e in &mappings.entries {
            map.entry((e.kind, e.source_term.as_str())).or_insert(e);
        }
        Resolver { schema, map }
    }

    fn resolve(&self, kind: TermKind, term: &str) -> Resolved<'a> {
        // canonical names are fixed points, which keeps translation idempotent
        if canonical_exists(self.schema, kind, term) {
            return Resolved::Canonical;
        }
        match self.map.get(&(kind, term)) {
            Some(e) => Resolved::Mapped(e),
            None => Resolved::Unmapped,
        }
    }

    fn props(&self, props: &PropertyMap, owner: &str, report: &mut TranslationReport) -> PropertyMap {
        let mut out = PropertyMap::new();
        let mut renamed = Vec::new();
        for (k, v) in props {
            match self.resolve(TermKind::Property, k) {
                Resolved::Canonical => {
                    out.insert(k.clone(), v.clone());
                }
                Resolved::Mapped(e) => renamed.push((k, &e.canonical_term, v)),
                Resolved::Unmapped => {
                    report.untranslated.insert((TermKind::Property, k.clone()));
                    out.insert(k.clone(), v.clone());
                }
            }
        }
        for (src, canonical, v) in renamed {
            *report.rewritten.entry(format!("property {src} -> {canonical}")).or_insert(0) += 1;
            if out.contains_key(canonical) {
                report.collisions.push(format!("{owner}: property {src} dropped, {canonical} already set"));
            } else {
                out.insert(canonical.clone(), v.clone());
            }
        }
        out
    }
}

/// Rewrites labels, relationship types and property keys through
/// `mappings`. Node and edge ids are preserved; unmapped terms pass through
/// and are listed in the report.
pub fn translate_graph(
    graph: &Graph,
    mappings: &MappingTable,
    schema: &SchemaDef,
) -> Result<(Graph, TranslationReport), TranslateError> {
    let unknown: Vec<MappingEntry> =
        mappings.entries.iter().filter(|e| !canonical_exists(schema, e.kind, &e.canonical_term)).cloned().collect();
    if !unknown.is_empty() {
        return Err(TranslateError::UnknownCanonicalTerm(unknown));
    }

    let resolver = Resolver::new(mappings, schema);
    let mut report = TranslationReport::default();
    let mut out = Graph::new();

    for node in graph.nodes() {
        let owner = node.id().to_string();
        let mut labels = BTreeSet::new();
        let mut mapped = Vec::new();
        for label in node.labels() {
            match resolver.resolve(TermKind::Class, label) {
                Resolved::Canonical => {
                    labels.insert(label.clone());
                }
                Resolved::Mapped(e) => mapped.push((label, &e.canonical_term)),
                Resolved::Unmapped => {
                    report.untranslated.insert((TermKind::Class, label.clone()));
                    labels.insert(label.clone());
                }
            }
        }
        for (src, canonical) in mapped {
            *report.rewritten.entry(format!("class {src} -> {canonical}")).or_insert(0) += 1;
            if !labels.insert(canonical.clone()) {
                report.collisions.push(format!("{owner}: label {src} dropped, {canonical} already present"));
            }
        }
        let props = resolver.props(node.props(), &owner, &mut report);
        out.insert_node(node.id(), labels, props)?;
    }

    for edge in graph.edges() {
        let owner = edge.id().to_string();
        let (rel, src, dst) = match resolver.resolve(TermKind::Relation, edge.rel_type()) {
            Resolved::Canonical => (edge.rel_type().to_string(), edge.src(), edge.dst()),
            Resolved::Mapped(e) => {
                *report
                    .rewritten
                    .entry(format!("relation {} -> {}", edge.rel_type(), e.canonical_term))
                    .or_insert(0) += 1;
                match e.direction {
                    MappingDirection::Forward => (e.canonical_term.clone(), edge.src(), edge.dst()),
                    MappingDirection::Reverse => {
                        report.reversed_edges += 1;
                        (e.canonical_term.clone(), edge.dst(), edge.src())
                    }
                }
            }
            Resolved::Unmapped => {
                report.untranslated.insert((TermKind::Relation, edge.rel_type().to_string()));
                (edge.rel_type().to_string(), edge.src(), edge.dst())
            }
        };
        let props = resolver.props(edge.props(), &owner, &mut report);
        out.insert_edge(edge.id(), &rel, src, dst, props)?;
    }
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{props, Direction, Quantity};
    use crate::ontology::builtin_schema;

    #[test]
    fn builtin_lookups() {
        let m = builtin_mappings();
        let e = m.lookup("Zhang2015", "hasInflow", TermKind::Relation).unwrap();
        assert_eq!((e.canonical_term.as_str(), e.direction), ("HAS_INPUT", MappingDirection::Forward));
        let e = m.lookup("LciO", "Input_Of", TermKind::Relation).unwrap();
        assert_eq!((e.canonical_term.as_str(), e.direction), ("HAS_INPUT", MappingDirection::Reverse));
        let e = m.lookup("Ghose2022", "isInputOf", TermKind::Relation).unwrap();
        assert_eq!(e.direction, MappingDirection::Reverse);
        assert!(m.lookup("Saad2023", "Has_values", TermKind::Relation).is_none());
        assert!(m.lookup("Ghose2022", "hasObjectType", TermKind::Relation).is_none());
        assert!(m.ontologies().contains("Kuczenski2016"));
    }

    #[test]
    fn builtin_is_conflict_free() {
        assert_eq!(detect_conflicts(&builtin_mappings(), &builtin_schema()), vec![]);
    }

    #[test]
    fn csv_parsing() {
        assert_eq!(parse_mappings(&MAPPING_HEADER.join(",")).unwrap(), MappingTable::default());
        let t = parse_mappings(
            "source_ontology,source_term,kind,canonical_term,direction\n\
             Zhang2015,hasInflow,relation,HAS_INPUT,forward\n",
        )
        .unwrap();
        assert_eq!(t.entries.len(), 1);
        assert_eq!(
            parse_mappings(
                "source_ontology,source_term,kind,canonical_term,direction\n\
                 X,Proc,class,Activity,reverse\n"
            ),
            Err(MappingError::ReverseOnNonRelation { line: 2 })
        );
        assert!(matches!(
            parse_mappings(
                "source_ontology,source_term,kind,canonical_term,direction\n\
                 X,a,class,Activity,\nX,a,class,Flow,\n"
            ),
            Err(MappingError::Duplicate { line: 3, .. })
        ));
        assert!(matches!(parse_mappings("a,b,c\n"), Err(MappingError::Syntax { line: 1, .. })));
        assert!(matches!(
            parse_mappings("source_ontology,source_term,kind,canonical_term,direction\nX,a,thing,B,\n"),
            Err(MappingError::Syntax { line: 2, .. })
        ));
        let builtin = builtin_mappings();
        assert_eq!(parse_mappings(&builtin.to_csv()).unwrap(), builtin);
    }

    #[test]
    fn conflicts() {
        let t = MappingTable::from_entries(vec![
            MappingEntry::new("A", "flow", TermKind::Class, "Flow", MappingDirection::Forward),
            MappingEntry::new("A", "flow", TermKind::Class, "Activity", MappingDirection::Forward),
        ]);
        let kinds: Vec<_> = detect_conflicts(&t, &builtin_schema()).iter().map(|c| c.kind).collect();
        assert_eq!(kinds, vec![ConflictKind::DuplicateSourceTerm, ConflictKind::DivergentTargets]);

        let t = MappingTable::from_entries(vec![MappingEntry::new(
            "A",
            "gizmo",
            TermKind::Class,
            "Widget",
            MappingDirection::Forward,
        )]);
        let c = detect_conflicts(&t, &builtin_schema());
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].kind, ConflictKind::UnknownCanonicalTerm);
        assert!(matches!(
            translate_graph(&Graph::new(), &t, &builtin_schema()),
            Err(TranslateError::UnknownCanonicalTerm(_))
        ));
    }

    #[test]
    fn empty_table_is_identity() {
        let mut g = Graph::new();
        let a = g.create_node(["Process"], props([("name", "mix".into())])).unwrap();
        let f = g.create_node(["Flow"], props([("hasFormula", "C4H6O4".into())])).unwrap();
        g.create_edge("hasOutflow", a, f, PropertyMap::new()).unwrap();
        let (out, report) = translate_graph(&g, &MappingTable::default(), &builtin_schema()).unwrap();
        assert_eq!(out, g);
        let terms: Vec<_> = report.untranslated.iter().map(|(k, t)| (*k, t.as_str())).collect();
        assert_eq!(
            terms,
            vec![(TermKind::Class, "Process"), (TermKind::Relation, "hasOutflow"), (TermKind::Property, "hasFormula"),]
        );
    }

    #[test]
    fn reverse_mapping_swaps_endpoints() {
        let mut g = Graph::new();
        let a = g.create_node(["Activity"], PropertyMap::new()).unwrap();
        let f = g.create_node(["Flow"], PropertyMap::new()).unwrap();
        let e = g.create_edge("Input_Of", f, a, props([("amount", Quantity::new(2.0, "kg").into())])).unwrap();
        let (out, report) = translate_graph(&g, &builtin_mappings(), &builtin_schema()).unwrap();
        let edge = out.edge(e).unwrap();
        assert_eq!((edge.rel_type(), edge.src(), edge.dst()), ("HAS_INPUT", a, f));
        assert_eq!(out.neighbors(a, Direction::Out, Some("HAS_INPUT")).unwrap(), vec![(e, f)]);
        assert_eq!(report.reversed_edges, 1);
        assert!(report.is_complete());
    }

    #[test]
    fn label_collision_keeps_canonical() {
        let mut g = Graph::new();
        let n = g.create_node(["UnitProcess", "Activity"], props([("hasBoundary", "cradle-to-gate".into())])).unwrap();
        let (out, report) = translate_graph(&g, &builtin_mappings(), &builtin_schema()).unwrap();
        let node = out.node(n).unwrap();
        assert_eq!(node.labels().iter().collect::<Vec<_>>(), vec!["Activity"]);
        assert_eq!(node.prop("boundary"), Some(&"cradle-to-gate".into()));
        assert_eq!(report.collisions.len(), 1);
    }

    #[test]
    fn translation_is_idempotent_on_builtin() {
        let mut g = Graph::new();
        let a = g.create_node(["Process"], PropertyMap::new()).unwrap();
        let f = g.create_node(["Flow"], PropertyMap::new()).unwrap();
        g.create_edge("Output_Of", f, a, PropertyMap::new()).unwrap();
        g.create_edge("Has_values", a, f, PropertyMap::new()).unwrap();
        let (once, _) = translate_graph(&g, &builtin_mappings(), &builtin_schema()).unwrap();
        let (twice, _) = translate_graph(&once, &builtin_mappings(), &builtin_schema()).unwrap();
        assert_eq!(once, twice);
    }
}
