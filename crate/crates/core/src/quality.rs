//! Data-quality scores and a FAIR readiness report.
//!
//! Each quality dimension is a measurable proxy reported with its evidence
//! counts, so a score can always be recomputed by hand:
//!
//! | dimension      | counts                                                    |
//! |----------------|-----------------------------------------------------------|
//! | accuracy_proxy | distinct labels, relationship types and keys the schema knows |
//! | completeness   | workflows whose activities cover all four life-cycle stages |
//! | consistency    | entities without a validation violation                   |
//! | precision      | exchange edges whose amount is a quantity with a unit     |
//! | traceability   | workflows with at least one reference                     |
//!
//! A ratio with an empty denominator is 1.0.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::graph::{from_triples, to_triples, write_snapshot, Direction, EntityId, Graph, PropertyValue};
use crate::ingest::STAGES;
use crate::ontology::{validate_graph, SchemaDef, Violation};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ratio {
    pub ratio: f64,
    pub numerator: usize,
    pub denominator: usize,
    /// What failed; always `denominator - numerator` entries.
    pub offenders: Vec<String>,
}

impl Ratio {
    fn from_offenders(denominator: usize, offenders: Vec<String>) -> Ratio {
        let numerator = denominator - offenders.len();
        Ratio {
            ratio: if denominator == 0 { 1.0 } else { numerator as f64 / denominator as f64 },
            numerator,
            denominator,
            offenders,
        }
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.4} ({}/{})", self.ratio, self.numerator, self.denominator)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QualityReport {
    pub accuracy_proxy: Ratio,
    pub completeness: Ratio,
    pub consistency: Ratio,
    pub precision: Ratio,
    pub traceability: Ratio,
}

impl QualityReport {
    pub fn dimensions(&self) -> [(&'static str, &Ratio); 5] {
        [
            ("accuracy_proxy", &self.accuracy_proxy),
            ("completeness", &self.completeness),
            ("consistency", &self.consistency),
            ("precision", &self.precision),
            ("traceability", &self.traceability),
        ]
    }
}

impl fmt::Display for QualityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, r) in self.dimensions() {
            writeln!(f, "{name:<15} {r}")?;
            for o in &r.offenders {
                writeln!(f, "    {o}")?;
            }
        }
        Ok(())
    }
}

fn text_prop<'a>(props: &'a crate::graph::PropertyMap, key: &str) -> Option<&'a str> {
    match props.get(key) {
        Some(PropertyValue::Text(s)) if !s.is_empty() => Some(s),
        _ => None,
    }
}

fn workflow_name(graph: &Graph, id: crate::graph::NodeId) -> String {
    match graph.node(id).and_then(|n| text_prop(n.props(), "id")) {
        Some(wid) => format!("{id} (workflow {wid})"),
        None => id.to_string(),
    }
}

fn out_degree(graph: &Graph, id: crate::graph::NodeId, rel: &str) -> usize {
    let mut n = 0;
    graph.for_each_neighbor(id, Direction::Out, Some(rel), |_, _| n += 1).expect("node exists");
    n
}

fn accuracy(graph: &Graph, schema: &SchemaDef) -> Ratio {
    let mut terms: BTreeSet<(&str, &str)> = BTreeSet::new();
    for n in graph.nodes() {
        terms.extend(n.labels().iter().map(|l| ("label", l.as_str())));
        terms.extend(n.props().keys().map(|k| ("property", k.as_str())));
    }
    for e in graph.edges() {
        terms.insert(("relation", e.rel_type()));
        terms.extend(e.props().keys().map(|k| ("property", k.as_str())));
    }
    let offenders = terms
        .iter()
        .filter(|(kind, term)| match *kind {
            "label" => !schema.has_class(term),
            "relation" => !schema.has_relation(term),
            _ => !schema.has_property_key(term),
        })
        .map(|(kind, term)| format!("{kind} {term}"))
        .collect();
    Ratio::from_offenders(terms.len(), offenders)
}

fn completeness(graph: &Graph) -> Ratio {
    let workflows: Vec<_> = graph.nodes_with_label("Workflow").collect();
    let mut offenders = Vec::new();
    for &w in &workflows {
        let mut stages = BTreeSet::new();
        graph
            .for_each_neighbor(w, Direction::Out, Some("HAS_STEP"), |_, a| {
                if let Some(s) = graph.node(a).and_then(|n| text_prop(n.props(), "stage")) {
                    stages.insert(s.to_string());
                }
            })
            .expect("node exists");
        let missing: Vec<_> = STAGES.iter().filter(|s| !stages.contains(**s)).copied().collect();
        if !missing.is_empty() {
            offenders.push(format!("{} lacks {}", workflow_name(graph, w), missing.join(", ")));
        }
    }
    Ratio::from_offenders(workflows.len(), offenders)
}

fn consistency(graph: &Graph, violations: &[Violation]) -> Ratio {
    let bad: BTreeSet<EntityId> = violations.iter().map(|v| v.target).collect();
    Ratio::from_offenders(graph.node_count() + graph.edge_count(), bad.into_iter().map(|t| t.to_string()).collect())
}

fn precision(graph: &Graph) -> Ratio {
    let mut total = 0;
    let mut offenders = Vec::new();
    for e in graph.edges() {
        if !matches!(e.rel_type(), "HAS_INPUT" | "HAS_OUTPUT") {
            continue;
        }
        total += 1;
        match e.prop("amount") {
            Some(PropertyValue::Quantity(q)) if !q.unit.trim().is_empty() => {}
            Some(PropertyValue::Quantity(_)) => offenders.push(format!("{} amount has no unit", e.id())),
            Some(other) => offenders.push(format!("{} amount is {}, not a quantity", e.id(), other.kind())),
            None => offenders.push(format!("{} has no amount", e.id())),
        }
    }
    Ratio::from_offenders(total, offenders)
}

fn traceability(graph: &Graph) -> Ratio {
    let workflows: Vec<_> = graph.nodes_with_label("Workflow").collect();
    let offenders = workflows
        .iter()
        .filter(|&&w| out_degree(graph, w, "HAS_REFERENCE") == 0)
        .map(|&w| format!("{} has no reference", workflow_name(graph, w)))
        .collect();
    Ratio::from_offenders(workflows.len(), offenders)
}

pub fn score_quality(graph: &Graph, schema: &SchemaDef) -> QualityReport {
    let violations = validate_graph(graph, schema);
    QualityReport {
        accuracy_proxy: accuracy(graph, schema),
        completeness: completeness(graph),
        consistency: consistency(graph, &violations),
        precision: precision(graph),
        traceability: traceability(graph),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FairCheck {
    pub passed: bool,
    /// Why the check failed; empty when it passed.
    pub reasons: Vec<String>,
    /// Informational findings that do not affect the outcome.
    pub notes: Vec<String>,
}

impl FairCheck {
    fn from_reasons(reasons: Vec<String>) -> FairCheck {
        FairCheck { passed: reasons.is_empty(), reasons, notes: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FairReport {
    pub findable: FairCheck,
    pub accessible: FairCheck,
    pub interoperable: FairCheck,
    /// Reported as "reusable (reproducibility)".
    pub reusable: FairCheck,
}

impl FairReport {
    pub fn all_passed(&self) -> bool {
        self.checks().iter().all(|(_, c)| c.passed)
    }

    pub fn checks(&self) -> [(&'static str, &FairCheck); 4] {
        [
            ("findable", &self.findable),
            ("accessible", &self.accessible),
            ("interoperable", &self.interoperable),
            ("reusable (reproducibility)", &self.reusable),
        ]
    }
}

impl fmt::Display for FairReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, c) in self.checks() {
            writeln!(f, "{name:<27} {}", if c.passed { "pass" } else { "FAIL" })?;
            for r in &c.reasons {
                writeln!(f, "    {r}")?;
            }
            for n in &c.notes {
                writeln!(f, "    note: {n}")?;
            }
        }
        Ok(())
    }
}

const MAX_LISTED: usize = 20;

fn capped(mut items: Vec<String>) -> Vec<String> {
    if items.len() > MAX_LISTED {
        let rest = items.len() - MAX_LISTED;
        items.truncate(MAX_LISTED);
        items.push(format!("... and {rest} more"));
    }
    items
}

fn findable(graph: &Graph) -> FairCheck {
    let mut reasons = Vec::new();
    for w in graph.nodes_with_label("Workflow") {
        let node = graph.node(w).expect("indexed node exists");
        if text_prop(node.props(), "id").is_none() {
            reasons.push(format!("{w} has no id"));
            continue;
        }
        let has_meta = node.props().keys().any(|k| k != "id")
            || out_degree(graph, w, "LOCATED_IN") > 0
            || out_degree(graph, w, "HAS_FUNCTIONAL_UNIT") > 0;
        if !has_meta {
            reasons.push(format!("{} has no metadata", workflow_name(graph, w)));
        }
    }
    FairCheck::from_reasons(capped(reasons))
}

fn accessible(graph: &Graph) -> FairCheck {
    match write_snapshot(graph, std::io::sink()) {
        Ok(()) => FairCheck::from_reasons(Vec::new()),
        Err(e) => FairCheck::from_reasons(vec![format!("snapshot export failed: {e}")]),
    }
}

fn interoperable(graph: &Graph, violations: &[Violation]) -> FairCheck {
    let mut reasons: Vec<String> = capped(violations.iter().map(|v| v.to_string()).collect());
    match from_triples(&to_triples(graph)) {
        Ok(back) if back == *graph => {}
        Ok(_) => reasons.push("triple round-trip changed the graph".into()),
        Err(e) => reasons.push(format!("triple round-trip failed: {e}")),
    }
    FairCheck::from_reasons(reasons)
}

fn reusable(graph: &Graph, traceability: &Ratio) -> FairCheck {
    let refs: Vec<_> = graph.nodes_with_label("Reference").collect();
    if refs.is_empty() {
        return FairCheck::from_reasons(vec!["no references".into()]);
    }
    let mut reasons: Vec<String> = traceability.offenders.clone();
    let mut unlicensed = 0;
    for r in &refs {
        let node = graph.node(*r).expect("indexed node exists");
        for key in ["author", "title"] {
            if text_prop(node.props(), key).is_none() {
                reasons.push(format!("reference {r} has no {key}"));
            }
        }
        if text_prop(node.props(), "license").is_none() {
            unlicensed += 1;
        }
    }
    let mut check = FairCheck::from_reasons(capped(reasons));
    if unlicensed > 0 {
        check.notes.push(format!("{unlicensed} of {} references carry no license", refs.len()));
    }
    check
}

pub fn fair_report(graph: &Graph, schema: &SchemaDef) -> FairReport {
    let violations = validate_graph(graph, schema);
    FairReport {
        findable: findable(graph),
        accessible: accessible(graph),
        interoperable: interoperable(graph, &violations),
        reusable: reusable(graph, &traceability(graph)),
    }
}
