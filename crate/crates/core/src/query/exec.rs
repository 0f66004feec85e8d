use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use super::ast::{AggFn, CmpOp, EdgeDirection};
use super::plan::{CExpr, CItem, Plan, Slot, Step};
use super::value::{sort_cmp, Comparison};
use super::{QueryError, ResultTable, Value};
use crate::graph::{Direction, EdgeId, Graph, NodeId, Quantity};

fn runtime<T>(message: String) -> Result<T, QueryError> {
    Err(QueryError::Runtime(message))
}

fn describe(v: &Value) -> String {
    match v {
        Value::Text(_) => format!("text {}", v.literal()),
        Value::Null => "null".into(),
        other => format!("{} {other}", other.kind_name()),
    }
}

#[derive(Clone)]
struct Binding {
    nodes: Vec<Option<NodeId>>,
    edges: Vec<Option<EdgeId>>,
}

struct Exec<'a> {
    plan: &'a Plan,
    graph: &'a Graph,
}

fn props_match(actual: &crate::graph::PropertyMap, wanted: &[(String, Value)]) -> bool {
    wanted.iter().all(|(k, v)| match actual.get(k) {
        Some(p) => values_equal(&Value::from(p), v),
        None => false,
    })
}

fn values_equal(a: &Value, b: &Value) -> bool {
    matches!(a.compare(b), Comparison::Ordered(Ordering::Equal) | Comparison::Equality(true))
}

pub(crate) fn compare(op: CmpOp, a: &Value, b: &Value) -> Result<bool, QueryError> {
    let c = a.compare(b);
    Ok(match (op, c) {
        (_, Comparison::Null) => false,
        (CmpOp::Eq, Comparison::Incomparable | Comparison::UnitMismatch) => false,
        (CmpOp::Ne, Comparison::Incomparable | Comparison::UnitMismatch) => true,
        (CmpOp::Eq, Comparison::Equality(e)) => e,
        (CmpOp::Ne, Comparison::Equality(e)) => !e,
        (_, Comparison::UnitMismatch) => {
            return runtime(format!("cannot order {} and {}: units differ", describe(a), describe(b)))
        }
        (_, Comparison::Incomparable | Comparison::Equality(_)) => false,
        (op, Comparison::Ordered(o)) => match op {
            CmpOp::Eq => o == Ordering::Equal,
            CmpOp::Ne => o != Ordering::Equal,
            CmpOp::Lt => o == Ordering::Less,
            CmpOp::Le => o != Ordering::Greater,
            CmpOp::Gt => o == Ordering::Greater,
            CmpOp::Ge => o != Ordering::Less,
        },
    })
}

fn truthy(v: &Value) -> Result<bool, QueryError> {
    match v {
        Value::Bool(b) => Ok(*b),
        Value::Null => Ok(false),
        other => runtime(format!("expected a boolean, got {}", describe(other))),
    }
}

impl Exec<'_> {
    fn eval(&self, e: &CExpr, b: &Binding) -> Result<Value, QueryError> {
        Ok(match e {
            CExpr::Lit(v) => v.clone(),
            CExpr::Var(Slot::Node(i)) => b.nodes[*i].map_or(Value::Null, Value::Node),
            CExpr::Var(Slot::Edge(i)) => b.edges[*i].map_or(Value::Null, Value::Edge),
            CExpr::Prop(Slot::Node(i), k) => {
                b.nodes[*i].and_then(|n| self.graph.node(n)).and_then(|n| n.prop(k)).map_or(Value::Null, Value::from)
            }
            CExpr::Prop(Slot::Edge(i), k) => {
                b.edges[*i].and_then(|e| self.graph.edge(e)).and_then(|e| e.prop(k)).map_or(Value::Null, Value::from)
            }
            CExpr::Cmp(op, l, r) => Value::Bool(compare(*op, &self.eval(l, b)?, &self.eval(r, b)?)?),
            CExpr::And(l, r) => Value::Bool(truthy(&self.eval(l, b)?)? && truthy(&self.eval(r, b)?)?),
            CExpr::Or(l, r) => Value::Bool(truthy(&self.eval(l, b)?)? || truthy(&self.eval(r, b)?)?),
            CExpr::Not(x) => Value::Bool(!truthy(&self.eval(x, b)?)?),
        })
    }

    fn node_ok(&self, slot: usize, id: NodeId) -> bool {
        let want = &self.plan.nodes[slot];
        let node = self.graph.node(id).expect("bound node exists");
        want.labels.iter().all(|l| node.has_label(l)) && props_match(node.props(), &want.props)
    }

    fn run(
        &self,
        step: usize,
        b: &mut Binding,
        emit: &mut dyn FnMut(&Binding) -> Result<(), QueryError>,
    ) -> Result<(), QueryError> {
        let Some(s) = self.plan.steps.get(step) else {
            return emit(b);
        };
        match s {
            Step::Scan { node, via_label } => {
                let candidates: Vec<NodeId> = match via_label {
                    Some(l) => self.graph.nodes_with_label(l).collect(),
                    None => self.graph.nodes().map(|n| n.id()).collect(),
                };
                for id in candidates {
                    if self.node_ok(*node, id) {
                        b.nodes[*node] = Some(id);
                        self.run(step + 1, b, emit)?;
                    }
                }
                b.nodes[*node] = None;
            }
            Step::Expand { edge, from, to, to_bound } => {
                let pat = &self.plan.edges[*edge];
                let origin = b.nodes[*from].expect("expansion starts at a bound node");
                let forward = *from == pat.a;
                let dir = match (pat.direction, forward) {
                    (EdgeDirection::Undirected, _) => Direction::Both,
                    (EdgeDirection::Right, true) | (EdgeDirection::Left, false) => Direction::Out,
                    _ => Direction::In,
                };
                let hits = self
                    .graph
                    .neighbors(origin, dir, pat.rel_type.as_deref())
                    .map_err(|e| QueryError::Runtime(e.to_string()))?;
                for (eid, other) in hits {
                    if b.edges.contains(&Some(eid)) {
                        continue;
                    }
                    let stored = self.graph.edge(eid).expect("adjacent edge exists");
                    if !props_match(stored.props(), &pat.props) {
                        continue;
                    }
                    if *to_bound {
                        if b.nodes[*to] != Some(other) {
                            continue;
                        }
                    } else if !self.node_ok(*to, other) {
                        continue;
                    }
                    b.edges[*edge] = Some(eid);
                    if !*to_bound {
                        b.nodes[*to] = Some(other);
                    }
                    self.run(step + 1, b, emit)?;
                }
                b.edges[*edge] = None;
                if !*to_bound {
                    b.nodes[*to] = None;
                }
            }
            Step::Filter(i) => {
                if truthy(&self.eval(&self.plan.filters[*i].expr, b)?)? {
                    self.run(step + 1, b, emit)?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum Sum {
    Empty,
    Int(i64),
    Real(f64),
    Qty(f64, String),
}

impl Sum {
    fn add(&mut self, v: &Value, func: AggFn) -> Result<(), QueryError> {
        let mismatch = |s: &Sum| {
            let held = match s {
                Sum::Qty(_, u) => format!("quantities in {u}"),
                _ => "plain numbers".into(),
            };
            QueryError::Runtime(format!("{} cannot combine {} with {}", func.name(), describe(v), held))
        };
        *self = match (&*self, v) {
            (_, Value::Null) => return Ok(()),
            (Sum::Empty, Value::Int(i)) => Sum::Int(*i),
            (Sum::Empty, Value::Real(x)) => Sum::Real(*x),
            (Sum::Empty, Value::Quantity(q)) => Sum::Qty(q.magnitude, q.unit.clone()),
            (Sum::Int(a), Value::Int(b)) => match a.checked_add(*b) {
                Some(s) => Sum::Int(s),
                None => return runtime(format!("{} overflowed a 64-bit integer", func.name())),
            },
            (Sum::Int(a), Value::Real(b)) => Sum::Real(*a as f64 + b),
            (Sum::Real(a), Value::Int(b)) => Sum::Real(a + *b as f64),
            (Sum::Real(a), Value::Real(b)) => Sum::Real(a + b),
            (Sum::Qty(a, u), Value::Quantity(q)) if *u == q.unit => Sum::Qty(a + q.magnitude, u.clone()),
            (s, Value::Int(_) | Value::Real(_) | Value::Quantity(_)) => return Err(mismatch(s)),
            (_, other) => return runtime(format!("{} over non-numeric value {}", func.name(), describe(other))),
        };
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum Acc {
    Count(i64),
    Sum(Sum),
    Avg(Sum, usize),
    Best(Option<Value>),
}

impl Acc {
    fn new(func: AggFn) -> Acc {
        match func {
            AggFn::Count => Acc::Count(0),
            AggFn::Sum => Acc::Sum(Sum::Empty),
            AggFn::Avg => Acc::Avg(Sum::Empty, 0),
            AggFn::Min | AggFn::Max => Acc::Best(None),
        }
    }

    fn add(&mut self, func: AggFn, v: Option<&Value>) -> Result<(), QueryError> {
        match self {
            Acc::Count(n) => {
                if v.is_none_or(|v| !v.is_null()) {
                    *n += 1;
                }
            }
            Acc::Sum(s) => s.add(v.expect("SUM has an argument"), func)?,
            Acc::Avg(s, n) => {
                let v = v.expect("AVG has an argument");
                s.add(v, func)?;
                if !v.is_null() {
                    *n += 1;
                }
            }
            Acc::Best(best) => {
                let v = v.expect("MIN/MAX has an argument");
                if v.is_null() {
                    return Ok(());
                }
                let Some(cur) = best else {
                    *best = Some(v.clone());
                    return Ok(());
                };
                let o = match cur.compare(v) {
                    Comparison::Ordered(o) => o,
                    Comparison::UnitMismatch => {
                        return runtime(format!(
                            "{} over quantities with different units: {} and {}",
                            func.name(),
                            describe(cur),
                            describe(v)
                        ))
                    }
                    _ => {
                        return runtime(format!(
                            "{} cannot compare {} with {}",
                            func.name(),
                            describe(cur),
                            describe(v)
                        ))
                    }
                };
                let replace = match func {
                    AggFn::Min => o == Ordering::Greater,
                    _ => o == Ordering::Less,
                };
                if replace {
                    *best = Some(v.clone());
                }
            }
        }
        Ok(())
    }

    fn finish(self) -> Value {
        match self {
            Acc::Count(n) => Value::Int(n),
            Acc::Sum(Sum::Empty) => Value::Int(0),
            Acc::Sum(Sum::Int(i)) => Value::Int(i),
            Acc::Sum(Sum::Real(x)) => Value::Real(x),
            Acc::Sum(Sum::Qty(x, u)) => Value::Quantity(Quantity::new(x, u)),
            Acc::Avg(_, 0) => Value::Null,
            Acc::Avg(Sum::Int(i), n) => Value::Real(i as f64 / n as f64),
            Acc::Avg(Sum::Real(x), n) => Value::Real(x / n as f64),
            Acc::Avg(Sum::Qty(x, u), n) => Value::Quantity(Quantity::new(x / n as f64, u)),
            Acc::Avg(Sum::Empty, _) => Value::Null,
            Acc::Best(v) => v.unwrap_or(Value::Null),
        }
    }
}

/// Runs a plan. The graph is only read.
pub fn execute_plan(plan: &Plan, graph: &Graph) -> Result<ResultTable, QueryError> {
    let exec = Exec { plan, graph };
    let mut binding = Binding { nodes: vec![None; plan.nodes.len()], edges: vec![None; plan.edges.len()] };
    let aggregate = plan.items.iter().any(|i| matches!(i, CItem::Agg(..)));
    let mut rows: Vec<Vec<Value>> = Vec::new();

    if !aggregate {
        exec.run(0, &mut binding, &mut |b| {
            let row = plan
                .items
                .iter()
                .map(|i| match i {
                    CItem::Expr(e) => exec.eval(e, b),
                    CItem::Agg(..) => unreachable!(),
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
            Ok(())
        })?;
    } else {
        // group key -> position in `groups`, keeping first-seen order
        let mut index: BTreeMap<Vec<Value>, usize> = BTreeMap::new();
        let mut groups: Vec<(Vec<Value>, Vec<Acc>)> = Vec::new();
        let fresh = || {
            plan.items
                .iter()
                .filter_map(|i| match i {
                    CItem::Agg(f, _) => Some(Acc::new(*f)),
                    CItem::Expr(_) => None,
                })
                .collect::<Vec<_>>()
        };
        exec.run(0, &mut binding, &mut |b| {
            let mut key = Vec::new();
            for item in &plan.items {
                if let CItem::Expr(e) = item {
                    key.push(exec.eval(e, b)?);
                }
            }
            let g = match index.get(&key) {
                Some(&g) => g,
                None => {
                    index.insert(key.clone(), groups.len());
                    groups.push((key, fresh()));
                    groups.len() - 1
                }
            };
            let mut accs = groups[g].1.iter_mut();
            for item in &plan.items {
                if let CItem::Agg(f, arg) = item {
                    let v = arg.as_ref().map(|a| exec.eval(a, b)).transpose()?;
                    accs.next().expect("one accumulator per aggregate").add(*f, v.as_ref())?;
                }
            }
            Ok(())
        })?;
        let has_keys = plan.items.iter().any(|i| matches!(i, CItem::Expr(_)));
        if groups.is_empty() && !has_keys {
            groups.push((Vec::new(), fresh()));
        }
        for (key, accs) in groups {
            let mut key = key.into_iter();
            let mut accs = accs.into_iter();
            rows.push(
                plan.items
                    .iter()
                    .map(|i| match i {
                        CItem::Expr(_) => key.next().expect("key value"),
                        CItem::Agg(..) => accs.next().expect("accumulator").finish(),
                    })
                    .collect(),
            );
        }
    }

    if plan.distinct {
        let mut seen = BTreeSet::new();
        rows.retain(|r| seen.insert(r.clone()));
    }
    if !plan.order_by.is_empty() {
        rows.sort_by(|x, y| {
            for &(i, desc) in &plan.order_by {
                let (a, b) = (&x[i], &y[i]);
                let o = match (a.is_null(), b.is_null()) {
                    (true, true) => Ordering::Equal,
                    (true, false) => Ordering::Greater,
                    (false, true) => Ordering::Less,
                    _ if desc => sort_cmp(b, a),
                    _ => sort_cmp(a, b),
                };
                if o != Ordering::Equal {
                    return o;
                }
            }
            Ordering::Equal
        });
    }
    if let Some(n) = plan.limit {
        rows.truncate(usize::try_from(n).unwrap_or(usize::MAX));
    }
    Ok(ResultTable { columns: plan.columns.clone(), rows })
}
