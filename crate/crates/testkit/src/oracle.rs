//! Brute-force query evaluation used as a reference for the planner and
//! executor.
//!
//! Every edge pattern is tried against every edge in every admissible
//! orientation, remaining node patterns against every node, and the
//! complete bindings are then filtered, grouped and sorted with code that
//! shares nothing with the engine beyond the AST and the value type.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use lcag_core::graph::{EdgeId, Graph, NodeId, PropertyMap, Quantity};
use lcag_core::query::{AggFn, CmpOp, EdgeDirection, Expr, Query, ResultTable, Value};

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

struct NodeOcc<'q> {
    var: String,
    labels: &'q [String],
    props: &'q [(String, Value)],
}

struct EdgeOcc<'q> {
    var: String,
    a: usize,
    b: usize,
    rel: Option<&'q str>,
    props: &'q [(String, Value)],
    dir: EdgeDirection,
}

#[derive(Default, Clone)]
struct Env {
    nodes: BTreeMap<String, NodeId>,
    edges: BTreeMap<String, EdgeId>,
}

fn is_num(v: &Value) -> bool {
    matches!(v, Value::Int(_) | Value::Real(_) | Value::Quantity(_))
}

fn num(v: &Value) -> f64 {
    match v {
        Value::Int(i) => *i as f64,
        Value::Real(x) => *x,
        Value::Quantity(q) => q.magnitude,
        _ => unreachable!(),
    }
}

fn same_kind(a: &Value, b: &Value) -> bool {
    std::mem::discriminant(a) == std::mem::discriminant(b)
}

pub fn cmp(op: CmpOp, a: &Value, b: &Value) -> Result<bool, String> {
    if a.is_null() || b.is_null() {
        return Ok(false);
    }
    let ord = if is_num(a) && is_num(b) {
        if let (Value::Quantity(x), Value::Quantity(y)) = (a, b) {
            if x.unit != y.unit {
                return match op {
                    CmpOp::Eq => Ok(false),
                    CmpOp::Ne => Ok(true),
                    _ => Err(format!("units differ: {a} vs {b}")),
                };
            }
        }
        match (a, b) {
            (Value::Int(x), Value::Int(y)) => Some(x.cmp(y)),
            _ => num(a).partial_cmp(&num(b)),
        }
    } else if let (Value::Text(x), Value::Text(y)) = (a, b) {
        Some(x.cmp(y))
    } else if let (Value::Bool(x), Value::Bool(y)) = (a, b) {
        Some(x.cmp(y))
    } else if same_kind(a, b) {
        // nodes, edges, arrays: equality only
        return Ok(match op {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            _ => false,
        });
    } else {
        None
    };
    Ok(match (op, ord) {
        (CmpOp::Eq, Some(o)) => o == Ordering::Equal,
        (CmpOp::Ne, Some(o)) => o != Ordering::Equal,
        (CmpOp::Lt, Some(o)) => o == Ordering::Less,
        (CmpOp::Le, Some(o)) => o != Ordering::Greater,
        (CmpOp::Gt, Some(o)) => o == Ordering::Greater,
        (CmpOp::Ge, Some(o)) => o != Ordering::Less,
        (CmpOp::Ne, None) => true,
        (_, None) => false,
    })
}

fn boolean(v: Value) -> Result<bool, String> {
    match v {
        Value::Null => Ok(false),
        Value::Bool(b) => Ok(b),
        other => Err(format!("not a boolean: {other}")),
    }
}

fn eval(e: &Expr, env: &Env, g: &Graph) -> Result<Value, String> {
    let prop = |m: &PropertyMap, k: &str| m.get(k).map_or(Value::Null, Value::from);
    Ok(match e {
        Expr::Literal(v) => v.clone(),
        Expr::Var(v) => match (env.nodes.get(v), env.edges.get(v)) {
            (Some(n), _) => Value::Node(*n),
            (_, Some(e)) => Value::Edge(*e),
            _ => return Err(format!("unbound {v}")),
        },
        Expr::Prop(v, k) => match (env.nodes.get(v), env.edges.get(v)) {
            (Some(n), _) => prop(g.node(*n).unwrap().props(), k),
            (_, Some(e)) => prop(g.edge(*e).unwrap().props(), k),
            _ => return Err(format!("unbound {v}")),
        },
        Expr::Cmp(op, a, b) => Value::Bool(cmp(*op, &eval(a, env, g)?, &eval(b, env, g)?)?),
        Expr::And(a, b) => Value::Bool(boolean(eval(a, env, g)?)? && boolean(eval(b, env, g)?)?),
        Expr::Or(a, b) => Value::Bool(boolean(eval(a, env, g)?)? || boolean(eval(b, env, g)?)?),
        Expr::Not(a) => Value::Bool(!boolean(eval(a, env, g)?)?),
        Expr::Agg(..) => return Err("aggregate outside RETURN".into()),
    })
}

fn props_ok(actual: &PropertyMap, wanted: &[(String, Value)]) -> Result<bool, String> {
    for (k, v) in wanted {
        let have = actual.get(k).map_or(Value::Null, Value::from);
        if !cmp(CmpOp::Eq, &have, v)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Every binding of the MATCH patterns, in no particular order.
fn bindings(q: &Query, g: &Graph) -> Result<Vec<Env>, String> {
    let mut nodes: Vec<NodeOcc> = Vec::new();
    let mut edges: Vec<EdgeOcc> = Vec::new();
    let mut fresh = 0;
    let mut name = |v: &Option<String>| {
        v.clone().unwrap_or_else(|| {
            fresh += 1;
            format!("  anon{fresh}")
        })
    };
    for p in &q.patterns {
        let mut prev = nodes.len();
        nodes.push(NodeOcc { var: name(&p.start.var), labels: &p.start.labels, props: &p.start.props });
        for (e, n) in &p.steps {
            nodes.push(NodeOcc { var: name(&n.var), labels: &n.labels, props: &n.props });
            let cur = nodes.len() - 1;
            edges.push(EdgeOcc {
                var: name(&e.var),
                a: prev,
                b: cur,
                rel: e.rel_type.as_deref(),
                props: &e.props,
                dir: e.direction,
            });
            prev = cur;
        }
    }

    let all_edges: Vec<_> = g.edges().collect();
    let all_nodes: Vec<NodeId> = g.nodes().map(|n| n.id()).collect();
    let mut out = Vec::new();

    fn bind_node(env: &mut Env, var: &str, id: NodeId) -> bool {
        match env.nodes.get(var) {
            Some(&have) => have == id,
            None => {
                env.nodes.insert(var.to_string(), id);
                true
            }
        }
    }

    // edges first, each choosing one of the graph's edges and an orientation
    let mut partial = vec![Env::default()];
    for occ in &edges {
        let mut next = Vec::new();
        for env in &partial {
            for e in &all_edges {
                if env.edges.values().any(|&used| used == e.id()) {
                    continue;
                }
                let orientations: &[(NodeId, NodeId)] = &match occ.dir {
                    EdgeDirection::Right => vec![(e.src(), e.dst())],
                    EdgeDirection::Left => vec![(e.dst(), e.src())],
                    EdgeDirection::Undirected if e.src() == e.dst() => vec![(e.src(), e.dst())],
                    EdgeDirection::Undirected => vec![(e.src(), e.dst()), (e.dst(), e.src())],
                };
                for &(x, y) in orientations {
                    let mut env = env.clone();
                    if bind_node(&mut env, &nodes[occ.a].var, x) && bind_node(&mut env, &nodes[occ.b].var, y) {
                        env.edges.insert(occ.var.clone(), e.id());
                        next.push(env);
                    }
                }
            }
        }
        partial = next;
    }
    // then node variables no edge reached
    for occ in &nodes {
        let mut next = Vec::new();
        for env in partial {
            if env.nodes.contains_key(&occ.var) {
                next.push(env);
                continue;
            }
            for &n in &all_nodes {
                let mut env = env.clone();
                env.nodes.insert(occ.var.clone(), n);
                next.push(env);
            }
        }
        partial = next;
    }

    for env in partial {
        let mut ok = true;
        for occ in &nodes {
            let node = g.node(env.nodes[&occ.var]).unwrap();
            if !occ.labels.iter().all(|l| node.has_label(l)) || !props_ok(node.props(), occ.props)? {
                ok = false;
                break;
            }
        }
        for occ in &edges {
            if !ok {
                break;
            }
            let edge = g.edge(env.edges[&occ.var]).unwrap();
            if occ.rel.is_some_and(|r| r != edge.rel_type()) || !props_ok(edge.props(), occ.props)? {
                ok = false;
            }
        }
        if ok {
            out.push(env);
        }
    }
    Ok(out)
}

fn aggregate(f: AggFn, arg: Option<&Expr>, group: &[Env], g: &Graph) -> Result<Value, String> {
    let Some(arg) = arg else {
        return Ok(Value::Int(group.len() as i64));
    };
    let vals: Vec<Value> = group
        .iter()
        .map(|env| eval(arg, env, g))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .filter(|v| !v.is_null())
        .collect();
    match f {
        AggFn::Count => Ok(Value::Int(vals.len() as i64)),
        AggFn::Sum | AggFn::Avg => {
            if vals.is_empty() {
                return Ok(if f == AggFn::Sum { Value::Int(0) } else { Value::Null });
            }
            if let Some(bad) = vals.iter().find(|v| !is_num(v)) {
                return Err(format!("non-numeric {bad}"));
            }
            let units: Vec<Option<&str>> = vals
                .iter()
                .map(|v| match v {
                    Value::Quantity(q) => Some(q.unit.as_str()),
                    _ => None,
                })
                .collect();
            if units.iter().any(|u| *u != units[0]) {
                return Err("mixed units".into());
            }
            let n = vals.len() as f64;
            if let Some(unit) = units[0] {
                let total: f64 = vals.iter().map(num).sum();
                let m = if f == AggFn::Sum { total } else { total / n };
                return Ok(Value::Quantity(Quantity::new(m, unit)));
            }
            if vals.iter().all(|v| matches!(v, Value::Int(_))) {
                let mut total: i64 = 0;
                for v in &vals {
                    let Value::Int(i) = v else { unreachable!() };
                    total = total.checked_add(*i).ok_or("overflow")?;
                }
                return Ok(if f == AggFn::Sum { Value::Int(total) } else { Value::Real(total as f64 / n) });
            }
            let total: f64 = vals.iter().map(num).sum();
            Ok(Value::Real(if f == AggFn::Sum { total } else { total / n }))
        }
        AggFn::Min | AggFn::Max => {
            let mut best: Option<Value> = None;
            for v in vals {
                best = Some(match best {
                    None => v,
                    Some(b) => {
                        let better = if f == AggFn::Min { cmp(CmpOp::Lt, &v, &b)? } else { cmp(CmpOp::Gt, &v, &b)? };
                        if !better && !cmp(CmpOp::Ge, &v, &b)? && !cmp(CmpOp::Le, &v, &b)? {
                            return Err(format!("cannot compare {v} with {b}"));
                        }
                        if better {
                            v
                        } else {
                            b
                        }
                    }
                });
            }
            Ok(best.unwrap_or(Value::Null))
        }
    }
}

/// Sort order for ORDER BY keys: nulls last in both directions, numbers by
/// magnitude.
pub fn order(a: &Value, b: &Value, desc: bool) -> Ordering {
    match (a.is_null(), b.is_null()) {
        (true, true) => return Ordering::Equal,
        (true, false) => return Ordering::Greater,
        (false, true) => return Ordering::Less,
        _ => {}
    }
    let o = if is_num(a) && is_num(b) { num(a).total_cmp(&num(b)).then_with(|| a.cmp(b)) } else { a.cmp(b) };
    if desc {
        o.reverse()
    } else {
        o
    }
}

fn row_order(q: &Query, x: &[Value], y: &[Value]) -> Ordering {
    q.order_by.iter().map(|&(i, desc)| order(&x[i], &y[i], desc)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
}

pub fn run_oracle(q: &Query, g: &Graph) -> Result<OracleResult, String> {
    let envs: Vec<Env> = bindings(q, g)?
        .into_iter()
        .filter_map(|env| match &q.where_clause {
            None => Some(Ok(env)),
            Some(w) => match eval(w, &env, g).and_then(boolean) {
                Ok(true) => Some(Ok(env)),
                Ok(false) => None,
                Err(e) => Some(Err(e)),
            },
        })
        .collect::<Result<_, _>>()?;

    let is_agg = q.returns.iter().any(|r| matches!(r.expr, Expr::Agg(..)));
    let mut rows: Vec<Vec<Value>> = Vec::new();
    if !is_agg {
        for env in &envs {
            rows.push(q.returns.iter().map(|r| eval(&r.expr, env, g)).collect::<Result<_, _>>()?);
        }
    } else {
        let mut groups: BTreeMap<Vec<Value>, Vec<Env>> = BTreeMap::new();
        for env in envs {
            let key = q
                .returns
                .iter()
                .filter(|r| !matches!(r.expr, Expr::Agg(..)))
                .map(|r| eval(&r.expr, &env, g))
                .collect::<Result<Vec<_>, _>>()?;
            groups.entry(key).or_default().push(env);
        }
        let keyed = q.returns.iter().any(|r| !matches!(r.expr, Expr::Agg(..)));
        if groups.is_empty() && !keyed {
            groups.insert(Vec::new(), Vec::new());
        }
        for (key, members) in groups {
            let mut key = key.into_iter();
            let mut row = Vec::new();
            for r in &q.returns {
                row.push(match &r.expr {
                    Expr::Agg(f, arg) => aggregate(*f, arg.as_deref(), &members, g)?,
                    _ => key.next().unwrap(),
                });
            }
            rows.push(row);
        }
    }
    if q.distinct {
        rows.sort();
        rows.dedup();
    }
    if !q.order_by.is_empty() {
        rows.sort_by(|x, y| row_order(q, x, y));
    }
    // LIMIT is left to `check_equivalent`, which knows about ties.
    Ok(OracleResult { columns: q.returns.iter().map(|r| r.column_name()).collect(), rows })
}

fn multiset(rows: &[Vec<Value>]) -> BTreeMap<&Vec<Value>, usize> {
    let mut m = BTreeMap::new();
    for r in rows {
        *m.entry(r).or_insert(0) += 1;
    }
    m
}

fn included(small: &[Vec<Value>], big: &[Vec<Value>]) -> bool {
    let b = multiset(big);
    multiset(small).iter().all(|(r, n)| b.get(r).is_some_and(|m| m >= n))
}

/// Checks an engine result against the unlimited oracle result. Without
/// ORDER BY the row multisets must match. With ORDER BY the sequence of
/// sort keys must match and, within each run of equal keys, the rows must
/// match as multisets; a run cut by LIMIT only needs to be a sub-multiset.
pub fn check_equivalent(q: &Query, engine: &ResultTable, oracle: &OracleResult) -> Result<(), String> {
    if engine.columns != oracle.columns {
        return Err(format!("columns {:?} != {:?}", engine.columns, oracle.columns));
    }
    let limit = q.limit.map_or(usize::MAX, |l| l as usize);
    let expected_len = oracle.rows.len().min(limit);
    if engine.rows.len() != expected_len {
        return Err(format!("{} rows, expected {expected_len}", engine.rows.len()));
    }
    if q.order_by.is_empty() {
        if q.limit.is_some() {
            return if included(&engine.rows, &oracle.rows) {
                Ok(())
            } else {
                Err("LIMIT result is not drawn from the full result".into())
            };
        }
        let (mut a, mut b) = (engine.rows.clone(), oracle.rows.clone());
        a.sort();
        b.sort();
        return if a == b { Ok(()) } else { Err(format!("rows differ:\n engine {a:?}\n oracle {b:?}")) };
    }
    let mut i = 0;
    while i < engine.rows.len() {
        let mut j = i;
        while j < oracle.rows.len() && row_order(q, &oracle.rows[i], &oracle.rows[j]).is_eq() {
            j += 1;
        }
        let end = j.min(engine.rows.len());
        for r in &engine.rows[i..end] {
            if row_order(q, r, &oracle.rows[i]).is_ne() {
                return Err(format!("row {r:?} out of order at {i}; expected key of {:?}", oracle.rows[i]));
            }
        }
        let ok = if end == j {
            multiset(&engine.rows[i..end]) == multiset(&oracle.rows[i..j])
        } else {
            included(&engine.rows[i..end], &oracle.rows[i..j])
        };
        if !ok {
            return Err(format!(
                "tie run {i}..{j} differs:\n engine {:?}\n oracle {:?}",
                &engine.rows[i..end],
                &oracle.rows[i..j]
            ));
        }
        i = j;
    }
    Ok(())
}

/// Number of query shapes produced by [`templates`].
pub const TEMPLATE_COUNT: usize = 18;

/// The query family used against [`crate::gen::query_graph`] graphs, with
/// constants drawn from `rng`. Covers node-only, one- and two-hop patterns,
/// inline property maps, WHERE, aggregates, DISTINCT, ORDER BY and LIMIT.
pub fn templates(rng: &mut rand::rngs::StdRng) -> Vec<String> {
    use rand::seq::SliceRandom;
    use rand::Rng;
    let k = rng.gen_range(0..5);
    let x = rng.gen_range(0..16) as f64 / 4.0;
    let name = *crate::gen::QUERY_NAMES.choose(rng).unwrap();
    let lim = rng.gen_range(0..6);
    let t = vec![
        "MATCH (n) RETURN n".to_string(),
        "MATCH (n:A) RETURN n, n.name".to_string(),
        format!("MATCH (n:A:B {{k: {k}}}) RETURN n.x"),
        "MATCH (a)-[e:R]->(b) RETURN a, e, b".to_string(),
        "MATCH (a:A)<-[e]-(b:B) RETURN a.k, b.k".to_string(),
        "MATCH (a)-[e]-(b) WHERE a.k < b.k RETURN a, b".to_string(),
        "MATCH (a:A)-[:R]->(b)-[:S]->(c) RETURN a, b, c".to_string(),
        "MATCH (a)-[e1]->(b)<-[e2]-(c) WHERE e1.w >= e2.w RETURN a.name, c.name".to_string(),
        format!("MATCH (a {{name: \"{name}\"}})-[e]->(b) WHERE b.x > {x:?} OR NOT b.k = {k} RETURN a, e"),
        "MATCH (a:A)-[e]->(b) RETURN a.name, COUNT(*), SUM(e.w) ORDER BY a.name".to_string(),
        "MATCH (n) RETURN DISTINCT n.k ORDER BY n.k DESC".to_string(),
        format!("MATCH (a)-[e]->(b) RETURN a.k, b.x ORDER BY a.k, b.x DESC LIMIT {lim}"),
        "MATCH (n:B) RETURN COUNT(n.x), AVG(n.x), MIN(n.k), MAX(n.name), SUM(n.k), AVG(n.w)".to_string(),
        "MATCH (a:A), (b:C) WHERE a.k = b.k RETURN a, b".to_string(),
        "MATCH (a)-[e]->(a) RETURN a, e".to_string(),
        format!("MATCH (a)-[e:T {{k: {k}}}]-(b)-[f]-(c) WHERE a <> c RETURN COUNT(*)"),
        format!(
            "MATCH (n) WHERE n.w > n.x AND n.name <> \"{name}\" RETURN n.name, SUM(n.w) AS s ORDER BY s DESC, n.name LIMIT 2"
        ),
        format!("MATCH (a)-[e]->(b:C) WHERE e.k >= {k} RETURN DISTINCT b.name, a.k > b.k AS up ORDER BY up, b.name"),
    ];
    debug_assert_eq!(t.len(), TEMPLATE_COUNT);
    t
}
