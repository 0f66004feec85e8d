//! The canonical inventory schema and graph validation.
//!
//! Schemas are written in a small line-oriented language:
//!
//! ```text
//! # comments start with '#'
//! class Flow requires name:text, kind:text enum kind {elementary, intermediate, product, waste}
//! rel HAS_INPUT Activity -> Flow requires amount:quantity
//! rel LOCATED_IN Workflow|Activity -> Location
//! ```
//!
//! Value kinds are `text`, `int`, `real`, `bool`, `realarray` and
//! `quantity`. Relations may only name declared classes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::graph::{Edge, EntityId, Graph, Node, PropertyMap, PropertyValue, ValueKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropDecl {
    pub key: String,
    pub kind: ValueKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassDef {
    pub name: String,
    pub required: Vec<PropDecl>,
    pub optional: Vec<PropDecl>,
    pub enums: BTreeMap<String, BTreeSet<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationDef {
    pub name: String,
    pub domain: BTreeSet<String>,
    pub range: BTreeSet<String>,
    pub required: Vec<PropDecl>,
    pub optional: Vec<PropDecl>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaDef {
    pub version: String,
    pub classes: Vec<ClassDef>,
    pub relations: Vec<RelationDef>,
}

impl SchemaDef {
    pub fn empty() -> Self {
        SchemaDef { version: "custom".into(), classes: Vec::new(), relations: Vec::new() }
    }

    pub fn class(&self, name: &str) -> Option<&ClassDef> {
        self.classes.iter().find(|c| c.name == name)
    }

    pub fn relation(&self, name: &str) -> Option<&RelationDef> {
        self.relations.iter().find(|r| r.name == name)
    }

    pub fn has_class(&self, name: &str) -> bool {
        self.class(name).is_some()
    }

    pub fn has_relation(&self, name: &str) -> bool {
        self.relation(name).is_some()
    }

    /// Every property key declared anywhere in the schema.
    pub fn property_keys(&self) -> BTreeSet<&str> {
        let class_keys = self.classes.iter().flat_map(|c| c.required.iter().chain(&c.optional));
        let rel_keys = self.relations.iter().flat_map(|r| r.required.iter().chain(&r.optional));
        class_keys.chain(rel_keys).map(|d| d.key.as_str()).collect()
    }

    pub fn has_property_key(&self, key: &str) -> bool {
        self.property_keys().contains(key)
    }
}

const BUILTIN_SCHEMA: &str = r#"
version lcag-inventory/1

class Workflow requires id:text optional boundary:text, valid_from:text, valid_to:text
class Activity requires name:text, workflow_id:text, step_index:int optional stage:text enum stage {production, transportation, usage, disposal}
class Flow requires name:text, kind:text enum kind {elementary, intermediate, product, waste}
class FlowQuantity requires name:text optional unit:text, value:quantity
class Agent requires agent_id:text, name:text
class FunctionalUnit requires workflow_id:text optional description:text, amount:quantity
class ImpactCategory requires name:text optional unit:text
class Location requires code:text
class Reference requires reference_id:text, author:text, title:text optional year:int, doi:text, license:text
class Parameter requires name:text, owner:text optional value:text, numeric:real, unit:text

rel HAS_STEP Workflow -> Activity requires index:int
rel NEXT Activity -> Activity
rel HAS_INPUT Activity -> Flow requires amount:quantity
rel HAS_OUTPUT Activity -> Flow requires amount:quantity
rel HAS_QUANTITY Flow -> FlowQuantity
rel PERFORMS Agent -> Activity
rel LOCATED_IN Workflow|Activity -> Location
rel HAS_REFERENCE Workflow -> Reference
rel HAS_FUNCTIONAL_UNIT Workflow -> FunctionalUnit
rel CONTRIBUTES_TO Flow|Activity -> ImpactCategory
rel HAS_PARAMETER Activity|Agent -> Parameter
"#;

/// The canonical inventory schema shipped with the crate.
pub fn builtin_schema() -> SchemaDef {
    parse_schema(BUILTIN_SCHEMA).expect("builtin schema parses")
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchemaError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: relation {relation} refers to undeclared class {class}")]
    DanglingReference { line: usize, relation: String, class: String },
    #[error("line {line}: duplicate declaration of {name}")]
    Duplicate { line: usize, name: String },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Colon,
    Comma,
    Pipe,
    Arrow,
    LBrace,
    RBrace,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Word(w) => write!(f, "{w:?}"),
            Tok::Colon => f.write_str("':'"),
            Tok::Comma => f.write_str("','"),
            Tok::Pipe => f.write_str("'|'"),
            Tok::Arrow => f.write_str("'->'"),
            Tok::LBrace => f.write_str("'{'"),
            Tok::RBrace => f.write_str("'}'"),
        }
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '-' | '.' | '/')
}

fn tokenize_line(line: &str, lineno: usize) -> Result<Vec<Tok>, SchemaError> {
    let mut toks = Vec::new();
    let mut chars = line.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        match c {
            c if c.is_whitespace() => {}
            ':' => toks.push(Tok::Colon),
            ',' => toks.push(Tok::Comma),
            '|' => toks.push(Tok::Pipe),
            '{' => toks.push(Tok::LBrace),
            '}' => toks.push(Tok::RBrace),
            '-' if chars.peek().map(|&(_, n)| n) == Some('>') => {
                chars.next();
                toks.push(Tok::Arrow);
            }
            c if is_word_char(c) => {
                let mut end = i + c.len_utf8();
                while let Some(&(j, n)) = chars.peek() {
                    // stop before an arrow glued to the word
                    if !is_word_char(n) || (n == '-' && line[j..].starts_with("->")) {
                        break;
                    }
                    end = j + n.len_utf8();
                    chars.next();
                }
                toks.push(Tok::Word(line[i..end].to_string()));
            }
            other => {
                return Err(SchemaError::Syntax { line: lineno, message: format!("unexpected character {other:?}") })
            }
        }
    }
    Ok(toks)
}

struct LineCursor {
    toks: Vec<Tok>,
    pos: usize,
    line: usize,
}

impl LineCursor {
    fn err(&self, message: impl Into<String>) -> SchemaError {
        SchemaError::Syntax { line: self.line, message: message.into() }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn word(&mut self, what: &str) -> Result<String, SchemaError> {
        match self.next() {
            Some(Tok::Word(w)) => Ok(w),
            Some(t) => Err(self.err(format!("expected {what}, found {t}"))),
            None => Err(self.err(format!("expected {what}, found end of line"))),
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), SchemaError> {
        match self.next() {
            Some(t) if t == tok => Ok(()),
            Some(t) => Err(self.err(format!("expected {tok}, found {t}"))),
            None => Err(self.err(format!("expected {tok}, found end of line"))),
        }
    }

    fn decls(&mut self) -> Result<Vec<PropDecl>, SchemaError> {
        let mut out = Vec::new();
        loop {
            let key = self.word("property key")?;
            self.expect(Tok::Colon)?;
            let kind_word = self.word("value kind")?;
            let kind = ValueKind::parse(&kind_word).ok_or_else(|| {
                self.err(format!("unknown value kind {kind_word:?} (expected text|int|real|bool|realarray|quantity)"))
            })?;
            out.push(PropDecl { key, kind });
            if self.peek() == Some(&Tok::Comma) {
                self.pos += 1;
            } else {
                return Ok(out);
            }
        }
    }

    fn class_set(&mut self) -> Result<BTreeSet<String>, SchemaError> {
        let mut set = BTreeSet::new();
        set.insert(self.word("class name")?);
        while self.peek() == Some(&Tok::Pipe) {
            self.pos += 1;
            set.insert(self.word("class name")?);
        }
        Ok(set)
    }
}

/// Parses schema text. Relations may refer to classes declared later in
/// the file.
pub fn parse_schema(text: &str) -> Result<SchemaDef, SchemaError> {
    let mut schema = SchemaDef::empty();
    let mut rel_lines = Vec::new();
    let mut seen_classes = BTreeSet::new();
    let mut seen_rels = BTreeSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let toks = tokenize_line(content, line)?;
        if toks.is_empty() {
            continue;
        }
        let mut cur = LineCursor { toks, pos: 0, line };
        let head = cur.word("'class', 'rel' or 'version'")?;
        match head.as_str() {
            "version" => {
                schema.version = cur.word("version tag")?;
            }
            "class" => {
                let name = cur.word("class name")?;
                if !seen_classes.insert(name.clone()) {
                    return Err(SchemaError::Duplicate { line, name });
                }
                let mut class = ClassDef { name, required: Vec::new(), optional: Vec::new(), enums: BTreeMap::new() };
                while cur.peek().is_some() {
                    let clause = cur.word("'requires', 'optional' or 'enum'")?;
                    match clause.as_str() {
                        "requires" => class.required.extend(cur.decls()?),
                        "optional" => class.optional.extend(cur.decls()?),
                        "enum" => {
                            let key = cur.word("enum property key")?;
                            cur.expect(Tok::LBrace)?;
                            let mut values = BTreeSet::new();
                            loop {
                                values.insert(cur.word("enum value")?);
                                match cur.next() {
                                    Some(Tok::Comma) => continue,
                                    Some(Tok::RBrace) => break,
                                    Some(t) => return Err(cur.err(format!("expected ',' or '}}', found {t}"))),
                                    None => return Err(cur.err("unterminated enum value list")),
                                }
                            }
                            class.enums.entry(key).or_default().extend(values);
                        }
                        other => return Err(cur.err(format!("unknown class clause {other:?}"))),
                    }
                }
                let mut keys = BTreeSet::new();
                for d in class.required.iter().chain(&class.optional) {
                    if !keys.insert(d.key.as_str()) {
                        return Err(cur.err(format!("property {:?} declared twice in {}", d.key, class.name)));
                    }
                }
                for key in class.enums.keys() {
                    let decl = class
                        .required
                        .iter()
                        .chain(&class.optional)
                        .find(|d| &d.key == key)
                        .ok_or_else(|| cur.err(format!("enum on undeclared property {key:?}")))?;
                    if decl.kind != ValueKind::Text {
                        return Err(cur.err(format!("enum property {key:?} must be text")));
                    }
                }
                schema.classes.push(class);
            }
            "rel" => {
                let name = cur.word("relation type")?;
                if !seen_rels.insert(name.clone()) {
                    return Err(SchemaError::Duplicate { line, name });
                }
                let domain = cur.class_set()?;
                cur.expect(Tok::Arrow)?;
                let range = cur.class_set()?;
                let mut rel = RelationDef { name, domain, range, required: Vec::new(), optional: Vec::new() };
                while cur.peek().is_some() {
                    let clause = cur.word("'requires' or 'optional'")?;
                    match clause.as_str() {
                        "requires" => rel.required.extend(cur.decls()?),
                        "optional" => rel.optional.extend(cur.decls()?),
                        other => return Err(cur.err(format!("unknown relation clause {other:?}"))),
                    }
                }
                rel_lines.push(line);
                schema.relations.push(rel);
            }
            other => return Err(cur.err(format!("expected 'class', 'rel' or 'version', found {other:?}"))),
        }
    }

    for (rel, line) in schema.relations.iter().zip(rel_lines) {
        if let Some(class) = rel.domain.iter().chain(&rel.range).find(|c| !seen_classes.contains(*c)) {
            return Err(SchemaError::DanglingReference { line, relation: rel.name.clone(), class: class.clone() });
        }
    }
    Ok(schema)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    UnknownLabel,
    UnknownRelation,
    DomainViolation,
    RangeViolation,
    MissingRequiredProperty,
    BadEnumValue,
    BadValueKind,
}

impl ViolationKind {
    pub const ALL: [ViolationKind; 7] = [
        ViolationKind::UnknownLabel,
        ViolationKind::UnknownRelation,
        ViolationKind::DomainViolation,
        ViolationKind::RangeViolation,
        ViolationKind::MissingRequiredProperty,
        ViolationKind::BadEnumValue,
        ViolationKind::BadValueKind,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ViolationKind::UnknownLabel => "unknown_label",
            ViolationKind::UnknownRelation => "unknown_relation",
            ViolationKind::DomainViolation => "domain_violation",
            ViolationKind::RangeViolation => "range_violation",
            ViolationKind::MissingRequiredProperty => "missing_required_property",
            ViolationKind::BadEnumValue => "bad_enum_value",
            ViolationKind::BadValueKind => "bad_value_kind",
        }
    }
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Violation {
    pub target: EntityId,
    pub kind: ViolationKind,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", self.target, self.kind, self.detail)
    }
}

/// Property requirements gathered from one or more declarations.
#[derive(Default)]
struct Requirements<'s> {
    required: BTreeMap<&'s str, &'s str>,
    kinds: BTreeMap<&'s str, BTreeSet<ValueKind>>,
    enums: Vec<(&'s str, &'s str, &'s BTreeSet<String>)>,
}

impl<'s> Requirements<'s> {
    fn add(&mut self, owner: &'s str, required: &'s [PropDecl], optional: &'s [PropDecl]) {
        for d in required {
            self.required.entry(&d.key).or_insert(owner);
        }
        for d in required.iter().chain(optional) {
            self.kinds.entry(&d.key).or_default().insert(d.kind);
        }
    }

    fn check(&self, target: EntityId, props: &PropertyMap, out: &mut Vec<Violation>) {
        for (key, owner) in &self.required {
            if !props.contains_key(*key) {
                out.push(Violation {
                    target,
                    kind: ViolationKind::MissingRequiredProperty,
                    detail: format!("{owner} requires property {key:?}"),
                });
            }
        }
        for (key, value) in props {
            let Some(kinds) = self.kinds.get(key.as_str()) else {
                continue;
            };
            if kinds.len() > 1 || !kinds.contains(&value.kind()) {
                let expected: Vec<&str> = kinds.iter().map(|k| k.as_str()).collect();
                out.push(Violation {
                    target,
                    kind: ViolationKind::BadValueKind,
                    detail: format!("property {key:?} is {} but must be {}", value.kind(), expected.join(" and ")),
                });
            }
        }
        for (owner, key, allowed) in &self.enums {
            if let Some(PropertyValue::Text(v)) = props.get(*key) {
                if !allowed.contains(v) {
                    let allowed: Vec<&str> = allowed.iter().map(String::as_str).collect();
                    out.push(Violation {
                        target,
                        kind: ViolationKind::BadEnumValue,
                        detail: format!("{owner}.{key} = {v:?} is not one of {{{}}}", allowed.join(", ")),
                    });
                }
            }
        }
    }
}

fn check_node(node: &Node, schema: &SchemaDef, out: &mut Vec<Violation>) {
    let target = EntityId::Node(node.id());
    let classes: Vec<&ClassDef> = node.labels().iter().filter_map(|l| schema.class(l)).collect();
    let unknown: Vec<&str> = node.labels().iter().filter(|l| !schema.has_class(l)).map(String::as_str).collect();
    if classes.is_empty() {
        let detail = if unknown.is_empty() {
            "node has no labels".to_string()
        } else {
            format!("no schema class among labels {}", unknown.join(", "))
        };
        out.push(Violation { target, kind: ViolationKind::UnknownLabel, detail });
        return;
    }
    if !unknown.is_empty() {
        out.push(Violation {
            target,
            kind: ViolationKind::UnknownLabel,
            detail: format!("labels not in schema: {}", unknown.join(", ")),
        });
    }
    let mut req = Requirements::default();
    for class in &classes {
        req.add(&class.name, &class.required, &class.optional);
        for (key, allowed) in &class.enums {
            req.enums.push((&class.name, key, allowed));
        }
    }
    req.check(target, node.props(), out);
}

fn check_edge(edge: &Edge, graph: &Graph, schema: &SchemaDef, out: &mut Vec<Violation>) {
    let target = EntityId::Edge(edge.id());
    let Some(rel) = schema.relation(edge.rel_type()) else {
        out.push(Violation {
            target,
            kind: ViolationKind::UnknownRelation,
            detail: format!("relationship type {} is not in schema", edge.rel_type()),
        });
        return;
    };
    let endpoint_ok =
        |id, allowed: &BTreeSet<String>| graph.node(id).is_some_and(|n| n.labels().iter().any(|l| allowed.contains(l)));
    let names = |set: &BTreeSet<String>| set.iter().cloned().collect::<Vec<_>>().join("|");
    if !endpoint_ok(edge.src(), &rel.domain) {
        out.push(Violation {
            target,
            kind: ViolationKind::DomainViolation,
            detail: format!("{} source {} is not {}", rel.name, edge.src(), names(&rel.domain)),
        });
    }
    if !endpoint_ok(edge.dst(), &rel.range) {
        out.push(Violation {
            target,
            kind: ViolationKind::RangeViolation,
            detail: format!("{} target {} is not {}", rel.name, edge.dst(), names(&rel.range)),
        });
    }
    let mut req = Requirements::default();
    req.add(&rel.name, &rel.required, &rel.optional);
    req.check(target, edge.props(), out);
}

/// Checks every node and edge against `schema`. The result is sorted by
/// entity (nodes first) and then violation kind; it is empty exactly when
/// the graph conforms.
pub fn validate_graph(graph: &Graph, schema: &SchemaDef) -> Vec<Violation> {
    let mut out = Vec::new();
    for node in graph.nodes() {
        check_node(node, schema, &mut out);
    }
    for edge in graph.edges() {
        check_edge(edge, graph, schema, &mut out);
    }
    out.sort();
    out
}
