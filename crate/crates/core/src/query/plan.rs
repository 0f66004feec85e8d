//! Compilation of a checked AST into variable slots, and step ordering.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use super::ast::{AggFn, CmpOp, EdgeDirection, Expr, Query};
use super::Value;
use crate::graph::Graph;

/// Cardinality estimates the planner consults.
pub trait GraphStats {
    fn label_cardinality(&self, label: &str) -> usize;
}

impl GraphStats for Graph {
    fn label_cardinality(&self, label: &str) -> usize {
        Graph::label_cardinality(self, label)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct NodeSlot {
    pub var: Option<String>,
    pub labels: BTreeSet<String>,
    pub props: Vec<(String, Value)>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct EdgeSlot {
    pub var: Option<String>,
    pub rel_type: Option<String>,
    pub props: Vec<(String, Value)>,
    /// Left and right endpoints as written.
    pub a: usize,
    pub b: usize,
    pub direction: EdgeDirection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) enum Slot {
    Node(usize),
    Edge(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum CExpr {
    Lit(Value),
    Var(Slot),
    Prop(Slot, String),
    Cmp(CmpOp, Box<CExpr>, Box<CExpr>),
    And(Box<CExpr>, Box<CExpr>),
    Or(Box<CExpr>, Box<CExpr>),
    Not(Box<CExpr>),
}

impl CExpr {
    fn slots(&self, out: &mut BTreeSet<Slot>) {
        match self {
            CExpr::Lit(_) => {}
            CExpr::Var(s) | CExpr::Prop(s, _) => {
                out.insert(*s);
            }
            CExpr::Cmp(_, a, b) | CExpr::And(a, b) | CExpr::Or(a, b) => {
                a.slots(out);
                b.slots(out);
            }
            CExpr::Not(a) => a.slots(out),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum CItem {
    Expr(CExpr),
    Agg(AggFn, Option<CExpr>),
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Filter {
    pub expr: CExpr,
    pub text: String,
    pub needs: BTreeSet<Slot>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    /// Bind a node slot from the label index, or from all nodes.
    Scan {
        node: usize,
        via_label: Option<String>,
    },
    /// Bind an edge slot (and its far endpoint unless already bound) from
    /// the adjacency of a bound node.
    Expand {
        edge: usize,
        from: usize,
        to: usize,
        to_bound: bool,
    },
    Filter(usize),
}

/// An executable plan. Executing any plan for a query yields the same row
/// multiset; plans differ only in cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub(crate) nodes: Vec<NodeSlot>,
    pub(crate) edges: Vec<EdgeSlot>,
    pub(crate) filters: Vec<Filter>,
    pub(crate) items: Vec<CItem>,
    pub(crate) columns: Vec<String>,
    pub(crate) distinct: bool,
    pub(crate) order_by: Vec<(usize, bool)>,
    pub(crate) limit: Option<u64>,
    pub(crate) path_starts: Vec<usize>,
    pub steps: Vec<Step>,
}

impl Plan {
    /// The variable (or `_n<slot>` for anonymous nodes) scanned first.
    pub fn seed(&self) -> Option<String> {
        self.steps.iter().find_map(|s| match s {
            Step::Scan { node, .. } => Some(self.node_name(*node)),
            _ => None,
        })
    }

    /// The label index used for the first scan, if any.
    pub fn seed_label(&self) -> Option<&str> {
        self.steps.iter().find_map(|s| match s {
            Step::Scan { via_label, .. } => Some(via_label.as_deref()),
            _ => None,
        })?
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    fn node_name(&self, i: usize) -> String {
        self.nodes[i].var.clone().unwrap_or_else(|| format!("_n{i}"))
    }

    fn edge_name(&self, i: usize) -> String {
        self.edges[i].var.clone().unwrap_or_else(|| format!("_e{i}"))
    }
}

impl fmt::Display for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, step) in self.steps.iter().enumerate() {
            write!(f, "{:>2}. ", i + 1)?;
            match step {
                Step::Scan { node, via_label } => {
                    let n = self.node_name(*node);
                    match via_label {
                        Some(l) => writeln!(f, "scan {n} by label {l}")?,
                        None => writeln!(f, "scan {n} over all nodes")?,
                    }
                }
                Step::Expand { edge, from, to, to_bound } => {
                    let e = &self.edges[*edge];
                    let rel = e.rel_type.as_deref().map(|t| format!(":{t}")).unwrap_or_default();
                    let forward = *from == e.a;
                    let (l, r) = match (e.direction, forward) {
                        (EdgeDirection::Undirected, _) => ("-", "-"),
                        (EdgeDirection::Right, true) | (EdgeDirection::Left, false) => ("-", "->"),
                        _ => ("<-", "-"),
                    };
                    let check = if *to_bound { " (join on bound node)" } else { "" };
                    writeln!(
                        f,
                        "expand {}{l}[{}{rel}]{r}{}{check}",
                        self.node_name(*from),
                        self.edge_name(*edge),
                        self.node_name(*to)
                    )?;
                }
                Step::Filter(i) => writeln!(f, "filter {}", self.filters[*i].text)?,
            }
        }
        Ok(())
    }
}

struct Compiler {
    nodes: Vec<NodeSlot>,
    edges: Vec<EdgeSlot>,
    vars: HashMap<String, Slot>,
}

impl Compiler {
    fn node(&mut self, p: &super::ast::NodePattern) -> usize {
        let slot = match p.var.as_ref().and_then(|v| self.vars.get(v)) {
            Some(Slot::Node(i)) => *i,
            _ => {
                self.nodes.push(NodeSlot { var: p.var.clone(), labels: BTreeSet::new(), props: Vec::new() });
                let i = self.nodes.len() - 1;
                if let Some(v) = &p.var {
                    self.vars.insert(v.clone(), Slot::Node(i));
                }
                i
            }
        };
        let n = &mut self.nodes[slot];
        n.labels.extend(p.labels.iter().cloned());
        n.props.extend(p.props.iter().cloned());
        slot
    }

    fn expr(&self, e: &Expr) -> CExpr {
        let slot = |v: &str| *self.vars.get(v).expect("variables are checked by the parser");
        match e {
            Expr::Literal(v) => CExpr::Lit(v.clone()),
            Expr::Var(v) => CExpr::Var(slot(v)),
            Expr::Prop(v, k) => CExpr::Prop(slot(v), k.clone()),
            Expr::Cmp(op, a, b) => CExpr::Cmp(*op, Box::new(self.expr(a)), Box::new(self.expr(b))),
            Expr::And(a, b) => CExpr::And(Box::new(self.expr(a)), Box::new(self.expr(b))),
            Expr::Or(a, b) => CExpr::Or(Box::new(self.expr(a)), Box::new(self.expr(b))),
            Expr::Not(a) => CExpr::Not(Box::new(self.expr(a))),
            Expr::Agg(..) => unreachable!("aggregates are rejected outside RETURN items"),
        }
    }
}

fn conjuncts<'a>(e: &'a Expr, out: &mut Vec<&'a Expr>) {
    match e {
        Expr::And(a, b) => {
            conjuncts(a, out);
            conjuncts(b, out);
        }
        other => out.push(other),
    }
}

/// Slots, filters and return items; steps are left empty.
fn compile(q: &Query) -> Plan {
    let mut c = Compiler { nodes: Vec::new(), edges: Vec::new(), vars: HashMap::new() };
    let mut path_starts = Vec::new();
    for path in &q.patterns {
        let mut prev = c.node(&path.start);
        path_starts.push(prev);
        for (e, n) in &path.steps {
            let next = c.node(n);
            c.edges.push(EdgeSlot {
                var: e.var.clone(),
                rel_type: e.rel_type.clone(),
                props: e.props.clone(),
                a: prev,
                b: next,
                direction: e.direction,
            });
            if let Some(v) = &e.var {
                c.vars.insert(v.clone(), Slot::Edge(c.edges.len() - 1));
            }
            prev = next;
        }
    }
    let mut parts = Vec::new();
    if let Some(w) = &q.where_clause {
        conjuncts(w, &mut parts);
    }
    let filters = parts
        .into_iter()
        .map(|e| {
            let expr = c.expr(e);
            let mut needs = BTreeSet::new();
            expr.slots(&mut needs);
            Filter { expr, text: e.to_string(), needs }
        })
        .collect();
    let items = q
        .returns
        .iter()
        .map(|r| match &r.expr {
            Expr::Agg(f, arg) => CItem::Agg(*f, arg.as_ref().map(|a| c.expr(a))),
            e => CItem::Expr(c.expr(e)),
        })
        .collect();
    Plan {
        nodes: c.nodes,
        edges: c.edges,
        filters,
        items,
        columns: q.returns.iter().map(|r| r.column_name()).collect(),
        distinct: q.distinct,
        order_by: q.order_by.clone(),
        limit: q.limit,
        path_starts,
        steps: Vec::new(),
    }
}

struct Builder<'p> {
    plan: &'p Plan,
    bound: BTreeSet<Slot>,
    placed: Vec<bool>,
    expanded: Vec<bool>,
    steps: Vec<Step>,
}

impl Builder<'_> {
    fn new(plan: &Plan) -> Builder<'_> {
        Builder {
            plan,
            bound: BTreeSet::new(),
            placed: vec![false; plan.filters.len()],
            expanded: vec![false; plan.edges.len()],
            steps: Vec::new(),
        }
    }

    fn place_filters(&mut self) {
        for (i, f) in self.plan.filters.iter().enumerate() {
            if !self.placed[i] && f.needs.is_subset(&self.bound) {
                self.placed[i] = true;
                self.steps.push(Step::Filter(i));
            }
        }
    }

    fn scan(&mut self, node: usize, via_label: Option<String>) {
        self.steps.push(Step::Scan { node, via_label });
        self.bound.insert(Slot::Node(node));
    }

    fn expand(&mut self, edge: usize, from: usize) {
        let e = &self.plan.edges[edge];
        let to = if from == e.a { e.b } else { e.a };
        let to_bound = self.bound.contains(&Slot::Node(to));
        self.steps.push(Step::Expand { edge, from, to, to_bound });
        self.expanded[edge] = true;
        self.bound.insert(Slot::Edge(edge));
        self.bound.insert(Slot::Node(to));
    }

    fn finish(mut self) -> Vec<Step> {
        self.place_filters();
        debug_assert!(self.placed.iter().all(|p| *p));
        self.steps
    }
}

/// Seeds each connected part of the pattern at its most selective labeled
/// node and grows it edge by edge; filters run as soon as the variables they
/// mention are bound.
pub fn plan_query(q: &Query, stats: &impl GraphStats) -> Plan {
    let mut plan = compile(q);
    let mut b = Builder::new(&plan);
    b.place_filters();
    loop {
        let unbound: Vec<usize> = (0..plan.nodes.len()).filter(|i| !b.bound.contains(&Slot::Node(*i))).collect();
        let Some(&first) = unbound.first() else { break };
        // min cardinality over labeled slots; earlier slots win ties
        let mut best: Option<(usize, usize, &str)> = None;
        for &i in &unbound {
            for label in &plan.nodes[i].labels {
                let card = stats.label_cardinality(label);
                if best.is_none_or(|(c, _, _)| card < c) {
                    best = Some((card, i, label));
                }
            }
        }
        match best {
            Some((_, i, label)) => b.scan(i, Some(label.to_string())),
            None => b.scan(first, None),
        }
        b.place_filters();
        while let Some(edge) = (0..plan.edges.len()).find(|&e| {
            !b.expanded[e]
                && (b.bound.contains(&Slot::Node(plan.edges[e].a)) || b.bound.contains(&Slot::Node(plan.edges[e].b)))
        }) {
            let e = &plan.edges[edge];
            let from = if b.bound.contains(&Slot::Node(e.a)) { e.a } else { e.b };
            b.expand(edge, from);
            b.place_filters();
        }
    }
    plan.steps = b.finish();
    plan
}

/// The textbook plan: full scans, edges in written order, all filters last.
pub fn naive_plan(q: &Query) -> Plan {
    let mut plan = compile(q);
    let mut b = Builder::new(&plan);
    let mut edge = 0;
    for (path, &start) in q.patterns.iter().zip(&plan.path_starts) {
        if !b.bound.contains(&Slot::Node(start)) {
            b.scan(start, None);
        }
        for _ in &path.steps {
            b.expand(edge, plan.edges[edge].a);
            edge += 1;
        }
    }
    plan.steps = b.finish();
    plan
}
