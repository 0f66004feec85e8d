//! Lossless conversion between the property graph and subject/predicate/object
//! triples, serialized as N-Triples-style lines.
//!
//! IRI scheme:
//!
//! | thing                 | IRI                                 |
//! |-----------------------|-------------------------------------|
//! | node                  | `urn:lcag:node:<id>`                |
//! | label                 | `urn:lcag:label:<Label>` via `urn:lcag:meta:label` |
//! | property              | `urn:lcag:prop:<key>` with a typed literal |
//! | relationship          | `urn:lcag:rel:<TYPE>` between node IRIs |
//! | edge record           | `urn:lcag:edge:<id>` with `meta:src`, `meta:rel`, `meta:dst` |
//!
//! Every edge is written twice: once as the plain `<src> <rel:TYPE> <dst>`
//! statement that generic RDF tooling understands, and once reified under
//! its edge IRI, which carries the edge id and its properties. A node with
//! neither labels nor properties is kept alive by a single
//! `urn:lcag:meta:exists` statement. Name segments are percent-encoded.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use percent_encoding::{percent_decode_str, utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use thiserror::Error;

use super::{EdgeId, Graph, GraphError, NodeId, PropertyMap, PropertyValue, ValueKind};

const NODE: &str = "urn:lcag:node:";
const EDGE: &str = "urn:lcag:edge:";
const LABEL: &str = "urn:lcag:label:";
const PROP: &str = "urn:lcag:prop:";
const REL: &str = "urn:lcag:rel:";
const DT: &str = "urn:lcag:dt:";
const META_LABEL: &str = "urn:lcag:meta:label";
const META_EXISTS: &str = "urn:lcag:meta:exists";
const META_SRC: &str = "urn:lcag:meta:src";
const META_REL: &str = "urn:lcag:meta:rel";
const META_DST: &str = "urn:lcag:meta:dst";

const SEGMENT: &AsciiSet = &NON_ALPHANUMERIC.remove(b'-').remove(b'_').remove(b'.').remove(b'~');

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TripleObject {
    Iri(String),
    Literal { lexical: String, datatype: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub subject: String,
    pub predicate: String,
    pub object: TripleObject,
}

impl Triple {
    fn iri(subject: String, predicate: impl Into<String>, object: String) -> Self {
        Triple { subject, predicate: predicate.into(), object: TripleObject::Iri(object) }
    }

    fn literal(subject: String, predicate: String, value: &PropertyValue) -> Self {
        Triple {
            subject,
            predicate,
            object: TripleObject::Literal { lexical: value.lexical(), datatype: format!("{DT}{}", value.kind()) },
        }
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}> <{}> ", self.subject, self.predicate)?;
        match &self.object {
            TripleObject::Iri(iri) => write!(f, "<{iri}>")?,
            TripleObject::Literal { lexical, datatype } => {
                f.write_str("\"")?;
                for c in lexical.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        '\r' => f.write_str("\\r")?,
                        '\t' => f.write_str("\\t")?,
                        c if c.is_control() => write!(f, "\\u{:04X}", c as u32)?,
                        c => write!(f, "{c}")?,
                    }
                }
                write!(f, "\"^^<{datatype}>")?;
            }
        }
        f.write_str(" .")
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TripleError {
    #[error("unsupported vocabulary for subject(s): {}", .subjects.join(", "))]
    UnsupportedVocabulary { subjects: Vec<String> },
    #[error("integrity error: {0}")]
    Integrity(String),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

fn enc(s: &str) -> String {
    utf8_percent_encode(s, SEGMENT).to_string()
}

fn dec(s: &str) -> Option<String> {
    percent_decode_str(s).decode_utf8().ok().map(|c| c.into_owned())
}

fn node_iri(id: NodeId) -> String {
    format!("{NODE}{}", id.0)
}

/// Encodes the whole graph. The result is sorted by its rendered lines.
pub fn to_triples(graph: &Graph) -> Vec<Triple> {
    let mut out = Vec::new();
    for node in graph.nodes() {
        let s = node_iri(node.id());
        for label in node.labels() {
            out.push(Triple::iri(s.clone(), META_LABEL, format!("{LABEL}{}", enc(label))));
        }
        for (k, v) in node.props() {
            out.push(Triple::literal(s.clone(), format!("{PROP}{}", enc(k)), v));
        }
        if node.labels().is_empty() && node.props().is_empty() {
            out.push(Triple::literal(s, META_EXISTS.into(), &PropertyValue::Bool(true)));
        }
    }
    for edge in graph.edges() {
        let rel = format!("{REL}{}", enc(edge.rel_type()));
        let s = format!("{EDGE}{}", edge.id().0);
        out.push(Triple::iri(node_iri(edge.src()), rel.clone(), node_iri(edge.dst())));
        out.push(Triple::iri(s.clone(), META_SRC, node_iri(edge.src())));
        out.push(Triple::iri(s.clone(), META_REL, rel));
        out.push(Triple::iri(s.clone(), META_DST, node_iri(edge.dst())));
        for (k, v) in edge.props() {
            out.push(Triple::literal(s.clone(), format!("{PROP}{}", enc(k)), v));
        }
    }
    let mut keyed: Vec<(String, Triple)> = out.into_iter().map(|t| (t.to_string(), t)).collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    keyed.into_iter().map(|(_, t)| t).collect()
}

pub fn write_ntriples(triples: &[Triple]) -> String {
    let mut s = String::new();
    for t in triples {
        s.push_str(&t.to_string());
        s.push('\n');
    }
    s
}

#[derive(Default)]
struct EdgeParts {
    src: Option<NodeId>,
    rel: Option<String>,
    dst: Option<NodeId>,
    props: PropertyMap,
}

fn integrity(msg: impl Into<String>) -> TripleError {
    TripleError::Integrity(msg.into())
}

fn parse_id(iri: &str, prefix: &str) -> Option<u64> {
    let rest = iri.strip_prefix(prefix)?;
    if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    rest.parse().ok()
}

fn literal_value(obj: &TripleObject) -> Result<PropertyValue, String> {
    let TripleObject::Literal { lexical, datatype } = obj else {
        return Err("property object must be a literal".into());
    };
    let kind =
        datatype.strip_prefix(DT).and_then(ValueKind::parse).ok_or_else(|| format!("unknown datatype <{datatype}>"))?;
    PropertyValue::from_lexical(kind, lexical)
}

fn insert_prop(map: &mut PropertyMap, key: String, value: PropertyValue, owner: &str) -> Result<(), TripleError> {
    match map.get(&key) {
        Some(prev) if *prev != value => Err(integrity(format!("{owner} has conflicting values for property {key:?}"))),
        _ => {
            map.insert(key, value);
            Ok(())
        }
    }
}

/// Rebuilds a graph from triples in this module's IRI scheme.
pub fn from_triples(triples: &[Triple]) -> Result<Graph, TripleError> {
    let mut foreign = BTreeSet::new();
    let mut nodes: BTreeMap<u64, (BTreeSet<String>, PropertyMap)> = BTreeMap::new();
    let mut edges: BTreeMap<u64, EdgeParts> = BTreeMap::new();
    let mut direct: Vec<(NodeId, String, NodeId)> = Vec::new();

    for t in triples {
        if let Some(id) = parse_id(&t.subject, NODE) {
            let entry = nodes.entry(id).or_default();
            let owner = format!("node {id}");
            match (t.predicate.as_str(), &t.object) {
                (META_LABEL, TripleObject::Iri(o)) => {
                    match o.strip_prefix(LABEL).and_then(dec).filter(|l| !l.is_empty()) {
                        Some(label) => {
                            entry.0.insert(label);
                        }
                        None => {
                            foreign.insert(t.subject.clone());
                        }
                    }
                }
                (META_EXISTS, _) => {}
                (p, obj) if p.starts_with(PROP) => {
                    let key = dec(&p[PROP.len()..])
                        .filter(|k| !k.is_empty())
                        .ok_or_else(|| integrity(format!("bad property predicate <{p}>")))?;
                    let value = literal_value(obj).map_err(|m| integrity(format!("{owner}: {m}")))?;
                    insert_prop(&mut entry.1, key, value, &owner)?;
                }
                (p, TripleObject::Iri(o)) if p.starts_with(REL) => {
                    let rel = dec(&p[REL.len()..]).filter(|r| !r.is_empty());
                    match (rel, parse_id(o, NODE)) {
                        (Some(rel), Some(dst)) => direct.push((NodeId(id), rel, NodeId(dst))),
                        _ => {
                            foreign.insert(t.subject.clone());
                        }
                    }
                }
                _ => {
                    foreign.insert(t.subject.clone());
                }
            }
        } else if let Some(id) = parse_id(&t.subject, EDGE) {
            let entry = edges.entry(id).or_default();
            let owner = format!("edge {id}");
            let endpoint = |obj: &TripleObject| match obj {
                TripleObject::Iri(o) => parse_id(o, NODE).map(NodeId),
                _ => None,
            };
            match t.predicate.as_str() {
                META_SRC | META_DST => {
                    let n = endpoint(&t.object)
                        .ok_or_else(|| integrity(format!("{owner}: endpoint must be a node IRI")))?;
                    let slot = if t.predicate == META_SRC { &mut entry.src } else { &mut entry.dst };
                    if slot.is_some_and(|prev| prev != n) {
                        return Err(integrity(format!("{owner} has conflicting <{}>", t.predicate)));
                    }
                    *slot = Some(n);
                }
                META_REL => {
                    let rel = match &t.object {
                        TripleObject::Iri(o) => o.strip_prefix(REL).and_then(dec).filter(|r| !r.is_empty()),
                        _ => None,
                    }
                    .ok_or_else(|| integrity(format!("{owner}: relationship must be a rel IRI")))?;
                    if entry.rel.as_ref().is_some_and(|prev| *prev != rel) {
                        return Err(integrity(format!("{owner} has conflicting relationship types")));
                    }
                    entry.rel = Some(rel);
                }
                p if p.starts_with(PROP) => {
                    let key = dec(&p[PROP.len()..])
                        .filter(|k| !k.is_empty())
                        .ok_or_else(|| integrity(format!("bad property predicate <{p}>")))?;
                    let value = literal_value(&t.object).map_err(|m| integrity(format!("{owner}: {m}")))?;
                    insert_prop(&mut entry.props, key, value, &owner)?;
                }
                _ => {
                    foreign.insert(t.subject.clone());
                }
            }
        } else {
            foreign.insert(t.subject.clone());
        }
    }
    if !foreign.is_empty() {
        return Err(TripleError::UnsupportedVocabulary { subjects: foreign.into_iter().collect() });
    }

    let mut graph = Graph::new();
    for (id, (labels, props)) in nodes {
        graph.insert_node(NodeId(id), labels, props).map_err(|e| integrity(e.to_string()))?;
    }

    // Plain relationship statements pair off with edge records; any left
    // over become edges of their own.
    let mut unmatched: BTreeMap<(NodeId, String, NodeId), usize> = BTreeMap::new();
    for key in direct {
        *unmatched.entry(key).or_insert(0) += 1;
    }
    for (id, parts) in edges {
        let (Some(src), Some(rel), Some(dst)) = (parts.src, parts.rel.clone(), parts.dst) else {
            let missing: Vec<&str> = [
                (parts.src.is_none(), "meta:src"),
                (parts.rel.is_none(), "meta:rel"),
                (parts.dst.is_none(), "meta:dst"),
            ]
            .into_iter()
            .filter_map(|(m, name)| m.then_some(name))
            .collect();
            return Err(integrity(format!("edge {id} is missing {}", missing.join(", "))));
        };
        if let Some(n) = unmatched.get_mut(&(src, rel.clone(), dst)) {
            *n = n.saturating_sub(1);
        }
        graph.insert_edge(EdgeId(id), &rel, src, dst, parts.props).map_err(|e| match e {
            GraphError::UnknownNode(n) => {
                integrity(format!("edge {id} refers to node {} which has no statements", n.0))
            }
            other => integrity(format!("edge {id}: {other}")),
        })?;
    }
    for ((src, rel, dst), count) in unmatched {
        for _ in 0..count {
            let next = graph.next_edge_id();
            graph
                .insert_edge(next, &rel, src, dst, PropertyMap::new())
                .map_err(|e| integrity(format!("relationship {rel}: {e}")))?;
        }
    }
    Ok(graph)
}

struct LineParser<'a> {
    rest: &'a str,
    line: usize,
}

impl<'a> LineParser<'a> {
    fn err(&self, message: impl Into<String>) -> TripleError {
        TripleError::Malformed { line: self.line, message: message.into() }
    }

    fn skip_ws(&mut self) {
        self.rest = self.rest.trim_start_matches([' ', '\t']);
    }

    fn iri(&mut self) -> Result<String, TripleError> {
        self.skip_ws();
        let body = self.rest.strip_prefix('<').ok_or_else(|| self.err("expected '<'"))?;
        let end = body.find('>').ok_or_else(|| self.err("unterminated IRI"))?;
        let iri = body[..end].to_string();
        self.rest = &body[end + 1..];
        Ok(iri)
    }

    fn object(&mut self) -> Result<TripleObject, TripleError> {
        self.skip_ws();
        if self.rest.starts_with('<') {
            return self.iri().map(TripleObject::Iri);
        }
        let mut chars = self.rest.strip_prefix('"').ok_or_else(|| self.err("expected IRI or literal"))?.char_indices();
        let body_start = &self.rest[1..];
        let mut lexical = String::new();
        let end = loop {
            let (i, c) = chars.next().ok_or_else(|| self.err("unterminated literal"))?;
            match c {
                '"' => break i,
                '\\' => {
                    let (_, e) = chars.next().ok_or_else(|| self.err("dangling escape"))?;
                    match e {
                        'n' => lexical.push('\n'),
                        'r' => lexical.push('\r'),
                        't' => lexical.push('\t'),
                        '"' => lexical.push('"'),
                        '\\' => lexical.push('\\'),
                        'u' | 'U' => {
                            let len = if e == 'u' { 4 } else { 8 };
                            let hex: String = (0..len).filter_map(|_| chars.next().map(|(_, h)| h)).collect();
                            let c = u32::from_str_radix(&hex, 16)
                                .ok()
                                .and_then(char::from_u32)
                                .ok_or_else(|| self.err(format!("bad unicode escape \\{e}{hex}")))?;
                            lexical.push(c);
                        }
                        other => return Err(self.err(format!("unknown escape \\{other}"))),
                    }
                }
                c => lexical.push(c),
            }
        };
        self.rest = &body_start[end + 1..];
        let dt = self.rest.strip_prefix("^^").ok_or_else(|| self.err("literal needs a ^^<datatype>"))?;
        self.rest = dt;
        let datatype = self.iri()?;
        Ok(TripleObject::Literal { lexical, datatype })
    }
}

/// Parses N-Triples-style text. Blank lines and `#` comments are skipped.
pub fn parse_ntriples(text: &str) -> Result<Vec<Triple>, TripleError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut p = LineParser { rest: trimmed, line: idx + 1 };
        let subject = p.iri()?;
        let predicate = p.iri()?;
        let object = p.object()?;
        p.skip_ws();
        if p.rest != "." {
            return Err(p.err("expected terminating '.'"));
        }
        out.push(Triple { subject, predicate, object });
    }
    Ok(out)
}
