//! The four unified tables: row types, CSV parsing and statement building.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Debug;
use std::str::FromStr;

use super::{NodeKey, Op, Statement};
use crate::graph::{PropertyMap, PropertyValue, Quantity, Uncertainty};

/// A parsed row and the CSV line it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Located<R> {
    pub line: usize,
    pub row: R,
}

/// One table kind: its header, how a record becomes a row, and how rows
/// become statements. Registering a new implementation with
/// [`super::IngestPipeline::register`] is all a new table needs.
pub trait TableSpec: 'static {
    type Row: Clone + Debug + PartialOrd;
    const NAME: &'static str;
    const HEADER: &'static [&'static str];

    fn parse_record(fields: &Fields<'_>) -> Result<Self::Row, String>;

    /// Rows sharing a uniqueness key are rejected after the first.
    fn unique_key(_row: &Self::Row) -> Option<String> {
        None
    }

    /// Rows arrive in canonical (sorted) order.
    fn build(rows: &[Located<Self::Row>]) -> Vec<Statement>;
}

/// Field access by column index with error messages naming the column.
pub struct Fields<'a> {
    header: &'static [&'static str],
    record: &'a csv::StringRecord,
}

impl<'a> Fields<'a> {
    pub(super) fn new(header: &'static [&'static str], record: &'a csv::StringRecord) -> Self {
        Fields { header, record }
    }

    pub fn opt(&self, i: usize) -> Option<&'a str> {
        self.record.get(i).filter(|s| !s.is_empty())
    }

    pub fn text(&self, i: usize) -> Result<String, String> {
        self.opt(i).map(str::to_string).ok_or_else(|| format!("{} must not be empty", self.header[i]))
    }

    pub fn parse<T: FromStr>(&self, i: usize) -> Result<T, String> {
        let raw = self.opt(i).ok_or_else(|| format!("{} must not be empty", self.header[i]))?;
        raw.parse().map_err(|_| format!("{} {raw:?} is not a valid {}", self.header[i], std::any::type_name::<T>()))
    }

    pub fn opt_parse<T: FromStr>(&self, i: usize) -> Result<Option<T>, String> {
        match self.opt(i) {
            None => Ok(None),
            Some(_) => self.parse(i).map(Some),
        }
    }

    pub fn finite(&self, i: usize) -> Result<f64, String> {
        let x: f64 = self.parse(i)?;
        if x.is_finite() {
            Ok(x)
        } else {
            Err(format!("{} must be finite", self.header[i]))
        }
    }

    pub fn one_of(&self, i: usize, allowed: &[&str]) -> Result<Option<String>, String> {
        match self.opt(i) {
            None => Ok(None),
            Some(v) if allowed.contains(&v) => Ok(Some(v.to_string())),
            Some(v) => Err(format!("{} {v:?} must be one of {}", self.header[i], allowed.join("|"))),
        }
    }
}

fn text(v: &str) -> PropertyValue {
    PropertyValue::Text(v.to_string())
}

fn key1(label: &str, k: &str, v: PropertyValue) -> NodeKey {
    NodeKey::new(label, [(k, v)])
}

fn workflow_key(id: &str) -> NodeKey {
    key1("Workflow", "id", text(id))
}

fn push(out: &mut Vec<Statement>, line: usize, op: Op) {
    out.push(Statement { line, op });
}

pub const STAGES: [&str; 4] = ["production", "transportation", "usage", "disposal"];
pub const FLOW_KINDS: [&str; 4] = ["elementary", "intermediate", "product", "waste"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FlowDirection {
    Input,
    Output,
}

#[derive(Debug, Clone, PartialEq, PartialOrd)]
pub struct WorkflowRow {
    pub workflow_id: String,
    pub step_index: u64,
    pub activity_name: String,
    pub stage: Option<String>,
    pub direction: FlowDirection,
    pub flow_name: String,
    pub flow_kind: String,
    pub amount: f64,
    pub unit: String,
    pub uncertainty: Uncertainty,
}

impl WorkflowRow {
    pub fn quantity(&self) -> Quantity {
        Quantity::new(self.amount, self.unit.clone()).with_uncertainty(self.uncertainty)
    }

    fn activity_key(&self) -> NodeKey {
        NodeKey::new(
            "Activity",
            [
                ("workflow_id", text(&self.workflow_id)),
                ("step_index", PropertyValue::Int(self.step_index as i64)),
                ("name", text(&self.activity_name)),
            ],
        )
    }

    fn flow_key(&self) -> NodeKey {
        NodeKey::new("Flow", [("name", text(&self.flow_name)), ("kind", text(&self.flow_kind))])
    }
}

pub struct WorkflowTable;

impl TableSpec for WorkflowTable {
    type Row = WorkflowRow;
    const NAME: &'static str = "workflow";
    const HEADER: &'static [&'static str] = &[
        "workflow_id",
        "step_index",
        "activity_name",
        "stage",
        "direction",
        "flow_name",
        "flow_kind",
        "amount",
        "unit",
        "unc_kind",
        "unc_a",
        "unc_b",
    ];

    fn parse_record(f: &Fields<'_>) -> Result<WorkflowRow, String> {
        let step_index: u64 = f.parse(1)?;
        if step_index > i64::MAX as u64 {
            return Err("step_index is too large".into());
        }
        let direction = match f.one_of(4, &["input", "output"])?.as_deref() {
            Some("input") => FlowDirection::Input,
            Some(_) => FlowDirection::Output,
            None => return Err("direction must not be empty".into()),
        };
        let flow_kind = f.one_of(6, &FLOW_KINDS)?.ok_or_else(|| "flow_kind must not be empty".to_string())?;
        let uncertainty = match f.one_of(9, &["uniform", "normal"])?.as_deref() {
            None => {
                if f.opt(10).is_some() || f.opt(11).is_some() {
                    return Err("unc_a/unc_b given without unc_kind".into());
                }
                Uncertainty::None
            }
            Some(kind) => {
                let (a, b) = (f.finite(10)?, f.finite(11)?);
                let u = if kind == "uniform" {
                    Uncertainty::Uniform { lo: a, hi: b }
                } else {
                    Uncertainty::Normal { mean: a, sd: b }
                };
                u.validate().map_err(|e| e.to_string())?;
                u
            }
        };
        Ok(WorkflowRow {
            workflow_id: f.text(0)?,
            step_index,
            activity_name: f.text(2)?,
            stage: f.one_of(3, &STAGES)?,
            direction,
            flow_name: f.text(5)?,
            flow_kind,
            amount: f.finite(7)?,
            unit: f.text(8)?,
            uncertainty,
        })
    }

    fn unique_key(r: &WorkflowRow) -> Option<String> {
        Some(format!("{}\0{}\0{:?}\0{}", r.workflow_id, r.step_index, r.direction, r.flow_name))
    }

    fn build(rows: &[Located<WorkflowRow>]) -> Vec<Statement> {
        let mut out = Vec::new();
        // per workflow: step index -> first line mentioning it
        let mut steps: BTreeMap<&str, BTreeMap<u64, usize>> = BTreeMap::new();
        for Located { line, row: r } in rows {
            let line = *line;
            let activity = r.activity_key();
            let mut payload = PropertyMap::new();
            if let Some(stage) = &r.stage {
                payload.insert("stage".into(), text(stage));
            }
            push(&mut out, line, Op::merge_node(workflow_key(&r.workflow_id)));
            push(&mut out, line, Op::MergeNode { node: activity.clone(), payload });
            push(&mut out, line, Op::merge_node(r.flow_key()));
            push(
                &mut out,
                line,
                Op::MergeEdge {
                    rel_type: "HAS_STEP".into(),
                    src: workflow_key(&r.workflow_id),
                    dst: activity.clone(),
                    payload: [("index".to_string(), PropertyValue::Int(r.step_index as i64))].into(),
                },
            );
            let rel = match r.direction {
                FlowDirection::Input => "HAS_INPUT",
                FlowDirection::Output => "HAS_OUTPUT",
            };
            push(
                &mut out,
                line,
                Op::MergeEdge {
                    rel_type: rel.into(),
                    src: activity,
                    dst: r.flow_key(),
                    payload: [("amount".to_string(), r.quantity().into())].into(),
                },
            );
            let first = steps.entry(&r.workflow_id).or_default().entry(r.step_index).or_insert(line);
            *first = (*first).min(line);
        }
        for (wf, indices) in steps {
            let ordered: Vec<_> = indices.into_iter().collect();
            for pair in ordered.windows(2) {
                let ((a, _), (b, line)) = (pair[0], pair[1]);
                let step = |i: u64| {
                    NodeKey::new("Activity", [("workflow_id", text(wf)), ("step_index", PropertyValue::Int(i as i64))])
                };
                push(
                    &mut out,
                    line,
                    Op::MergeEdge { rel_type: "NEXT".into(), src: step(a), dst: step(b), payload: PropertyMap::new() },
                );
            }
        }
        out
    }
}

pub const RESERVED_METADATA_KEYS: [&str; 7] = [
    "region",
    "functional_unit_desc",
    "functional_unit_amount",
    "functional_unit_unit",
    "boundary",
    "valid_from",
    "valid_to",
];

#[derive(Debug, Clone, PartialEq, PartialOrd)]
pub struct MetadataRow {
    pub workflow_id: String,
    pub key: String,
    pub value: String,
}

pub struct MetadataTable;

// first line, description, amount, unit
type FuParts<'a> = (usize, Option<&'a str>, Option<f64>, Option<&'a str>);

fn fu_entry<'m, 'a>(units: &'m mut BTreeMap<&'a str, FuParts<'a>>, wf: &'a str, line: usize) -> &'m mut FuParts<'a> {
    let e = units.entry(wf).or_insert((line, None, None, None));
    e.0 = e.0.min(line);
    e
}

impl TableSpec for MetadataTable {
    type Row = MetadataRow;
    const NAME: &'static str = "metadata";
    const HEADER: &'static [&'static str] = &["workflow_id", "key", "value"];

    fn parse_record(f: &Fields<'_>) -> Result<MetadataRow, String> {
        let row = MetadataRow { workflow_id: f.text(0)?, key: f.text(1)?, value: f.text(2)? };
        if row.key == "id" {
            return Err("key \"id\" would overwrite the workflow identifier".into());
        }
        if row.key == "functional_unit_amount" {
            match row.value.parse::<f64>() {
                Ok(x) if x.is_finite() => {}
                _ => return Err(format!("functional_unit_amount {:?} is not a finite number", row.value)),
            }
        }
        Ok(row)
    }

    fn unique_key(r: &MetadataRow) -> Option<String> {
        // a workflow may span several regions
        if r.key == "region" {
            Some(format!("{}\0region\0{}", r.workflow_id, r.value))
        } else {
            Some(format!("{}\0{}", r.workflow_id, r.key))
        }
    }

    fn build(rows: &[Located<MetadataRow>]) -> Vec<Statement> {
        let mut out = Vec::new();
        let mut units: BTreeMap<&str, FuParts<'_>> = BTreeMap::new();
        for Located { line, row: r } in rows {
            let line = *line;
            match r.key.as_str() {
                "region" => {
                    let loc = key1("Location", "code", text(&r.value));
                    push(&mut out, line, Op::merge_node(loc.clone()));
                    push(
                        &mut out,
                        line,
                        Op::MergeEdge {
                            rel_type: "LOCATED_IN".into(),
                            src: workflow_key(&r.workflow_id),
                            dst: loc,
                            payload: PropertyMap::new(),
                        },
                    );
                }
                "functional_unit_desc" => fu_entry(&mut units, &r.workflow_id, line).1 = Some(&r.value),
                "functional_unit_amount" => fu_entry(&mut units, &r.workflow_id, line).2 = r.value.parse().ok(),
                "functional_unit_unit" => fu_entry(&mut units, &r.workflow_id, line).3 = Some(&r.value),
                key => push(
                    &mut out,
                    line,
                    Op::SetProp { target: workflow_key(&r.workflow_id), key: key.to_string(), value: text(&r.value) },
                ),
            }
        }
        for (wf, (line, desc, amount, unit)) in units {
            let node = key1("FunctionalUnit", "workflow_id", text(wf));
            let mut payload = PropertyMap::new();
            if let Some(d) = desc {
                payload.insert("description".into(), text(d));
            }
            if let Some(a) = amount {
                payload.insert("amount".into(), Quantity::new(a, unit.unwrap_or("1")).into());
            }
            push(&mut out, line, Op::MergeNode { node: node.clone(), payload });
            push(
                &mut out,
                line,
                Op::MergeEdge {
                    rel_type: "HAS_FUNCTIONAL_UNIT".into(),
                    src: workflow_key(wf),
                    dst: node,
                    payload: PropertyMap::new(),
                },
            );
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, PartialOrd)]
pub struct AgentRow {
    pub workflow_id: String,
    pub agent_id: String,
    pub agent_name: String,
    pub feature_key: Option<String>,
    pub feature_value: Option<String>,
}

pub struct AgentTable;

impl TableSpec for AgentTable {
    type Row = AgentRow;
    const NAME: &'static str = "agent";
    const HEADER: &'static [&'static str] = &["workflow_id", "agent_id", "agent_name", "feature_key", "feature_value"];

    fn parse_record(f: &Fields<'_>) -> Result<AgentRow, String> {
        let row = AgentRow {
            workflow_id: f.text(0)?,
            agent_id: f.text(1)?,
            agent_name: f.text(2)?,
            feature_key: f.opt(3).map(str::to_string),
            feature_value: f.opt(4).map(str::to_string),
        };
        if row.feature_key.is_none() && row.feature_value.is_some() {
            return Err("feature_value given without feature_key".into());
        }
        Ok(row)
    }

    fn unique_key(r: &AgentRow) -> Option<String> {
        match &r.feature_key {
            Some(k) => Some(format!("{}\0{}", r.agent_id, k)),
            // bare membership rows: one per (agent, workflow)
            None => Some(format!("{}\0\0{}", r.agent_id, r.workflow_id)),
        }
    }

    fn build(rows: &[Located<AgentRow>]) -> Vec<Statement> {
        let mut out = Vec::new();
        for Located { line, row: r } in rows {
            let line = *line;
            let agent = key1("Agent", "agent_id", text(&r.agent_id));
            push(
                &mut out,
                line,
                Op::MergeNode { node: agent.clone(), payload: [("name".to_string(), text(&r.agent_name))].into() },
            );
            push(
                &mut out,
                line,
                Op::MergeEdge {
                    rel_type: "PERFORMS".into(),
                    src: agent.clone(),
                    dst: key1("Activity", "workflow_id", text(&r.workflow_id)),
                    payload: PropertyMap::new(),
                },
            );
            if let Some(feature) = &r.feature_key {
                let param = NodeKey::new("Parameter", [("owner", text(&r.agent_id)), ("name", text(feature))]);
                let mut payload = PropertyMap::new();
                if let Some(v) = &r.feature_value {
                    payload.insert("value".into(), text(v));
                    if let Some(x) = v.parse::<f64>().ok().filter(|x| x.is_finite()) {
                        payload.insert("numeric".into(), PropertyValue::Real(x));
                    }
                }
                push(&mut out, line, Op::MergeNode { node: param.clone(), payload });
                push(
                    &mut out,
                    line,
                    Op::MergeEdge {
                        rel_type: "HAS_PARAMETER".into(),
                        src: agent,
                        dst: param,
                        payload: PropertyMap::new(),
                    },
                );
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, PartialOrd)]
pub struct ReferenceRow {
    pub workflow_id: String,
    pub reference_id: String,
    pub author: String,
    pub title: String,
    pub year: Option<i64>,
    pub doi: Option<String>,
}

pub struct ReferenceTable;

impl TableSpec for ReferenceTable {
    type Row = ReferenceRow;
    const NAME: &'static str = "reference";
    const HEADER: &'static [&'static str] = &["workflow_id", "reference_id", "author", "title", "year", "doi"];

    fn parse_record(f: &Fields<'_>) -> Result<ReferenceRow, String> {
        Ok(ReferenceRow {
            workflow_id: f.text(0)?,
            reference_id: f.text(1)?,
            author: f.text(2)?,
            title: f.text(3)?,
            year: f.opt_parse(4)?,
            doi: f.opt(5).map(str::to_string),
        })
    }

    fn unique_key(r: &ReferenceRow) -> Option<String> {
        Some(r.reference_id.clone())
    }

    fn build(rows: &[Located<ReferenceRow>]) -> Vec<Statement> {
        let mut out = Vec::new();
        for Located { line, row: r } in rows {
            let line = *line;
            let node = key1("Reference", "reference_id", text(&r.reference_id));
            let mut payload: PropertyMap =
                [("author".to_string(), text(&r.author)), ("title".to_string(), text(&r.title))].into();
            if let Some(y) = r.year {
                payload.insert("year".into(), PropertyValue::Int(y));
            }
            if let Some(d) = &r.doi {
                payload.insert("doi".into(), text(d));
            }
            push(&mut out, line, Op::MergeNode { node: node.clone(), payload });
            push(
                &mut out,
                line,
                Op::MergeEdge {
                    rel_type: "HAS_REFERENCE".into(),
                    src: workflow_key(&r.workflow_id),
                    dst: node,
                    payload: PropertyMap::new(),
                },
            );
        }
        out
    }
}

/// Drops statements whose operation already appeared earlier in the list.
pub(super) fn dedup(statements: Vec<Statement>) -> Vec<Statement> {
    let mut seen = BTreeSet::new();
    statements
        .into_iter()
        .filter(|s| seen.insert(serde_json::to_string(&s.op).expect("statements serialize")))
        .collect()
}
