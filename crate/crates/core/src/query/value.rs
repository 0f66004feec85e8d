use std::cmp::Ordering;
use std::fmt;

use crate::graph::{EdgeId, NodeId, PropertyValue, Quantity, Uncertainty};

/// A value flowing through query evaluation.
#[derive(Debug, Clone)]
pub enum Value {
    Null,
    Bool(bool),
    Int(i64),
    Real(f64),
    Text(String),
    RealArray(Vec<f64>),
    Quantity(Quantity),
    Node(NodeId),
    Edge(EdgeId),
}

impl From<&PropertyValue> for Value {
    fn from(v: &PropertyValue) -> Self {
        match v {
            PropertyValue::Text(s) => Value::Text(s.clone()),
            PropertyValue::Int(i) => Value::Int(*i),
            PropertyValue::Real(x) => Value::Real(*x),
            PropertyValue::Bool(b) => Value::Bool(*b),
            PropertyValue::RealArray(a) => Value::RealArray(a.clone()),
            PropertyValue::Quantity(q) => Value::Quantity(q.clone()),
        }
    }
}

impl From<PropertyValue> for Value {
    fn from(v: PropertyValue) -> Self {
        Value::from(&v)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.into())
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Real(x)
    }
}

/// Outcome of comparing two values under query semantics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    /// One side is null.
    Null,
    /// The values are of kinds that cannot be compared.
    Incomparable,
    /// Two quantities with different units.
    UnitMismatch,
    Ordered(Ordering),
    /// Equal or not, but with no order (nodes, edges, arrays).
    Equality(bool),
}

fn rank(v: &Value) -> u8 {
    match v {
        Value::Bool(_) => 0,
        Value::Int(_) => 1,
        Value::Real(_) => 2,
        Value::Text(_) => 3,
        Value::RealArray(_) => 4,
        Value::Quantity(_) => 5,
        Value::Node(_) => 6,
        Value::Edge(_) => 7,
        Value::Null => 8,
    }
}

fn unc_key(u: &Uncertainty) -> (u8, f64, f64) {
    match *u {
        Uncertainty::None => (0, 0.0, 0.0),
        Uncertainty::Uniform { lo, hi } => (1, lo, hi),
        Uncertainty::Normal { mean, sd } => (2, mean, sd),
    }
}

impl Value {
    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    /// Numeric view: ints, reals and quantity magnitudes.
    pub fn magnitude(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Real(x) => Some(*x),
            Value::Quantity(q) => Some(q.magnitude),
            _ => None,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Value::Null => "null",
            Value::Bool(_) => "bool",
            Value::Int(_) => "int",
            Value::Real(_) => "real",
            Value::Text(_) => "text",
            Value::RealArray(_) => "realarray",
            Value::Quantity(_) => "quantity",
            Value::Node(_) => "node",
            Value::Edge(_) => "edge",
        }
    }

    /// Query semantics comparison. Numbers compare across int/real, and a
    /// quantity compares with a plain number by magnitude.
    pub fn compare(&self, other: &Value) -> Comparison {
        use Value::*;
        match (self, other) {
            (Null, _) | (_, Null) => Comparison::Null,
            (Int(a), Int(b)) => Comparison::Ordered(a.cmp(b)),
            (Quantity(a), Quantity(b)) => {
                if a.unit != b.unit {
                    Comparison::UnitMismatch
                } else {
                    a.magnitude.partial_cmp(&b.magnitude).map_or(Comparison::Incomparable, Comparison::Ordered)
                }
            }
            (Int(_) | Real(_) | Quantity(_), Int(_) | Real(_) | Quantity(_)) => {
                let (a, b) = (self.magnitude().unwrap(), other.magnitude().unwrap());
                a.partial_cmp(&b).map_or(Comparison::Incomparable, Comparison::Ordered)
            }
            (Text(a), Text(b)) => Comparison::Ordered(a.cmp(b)),
            (Bool(a), Bool(b)) => Comparison::Ordered(a.cmp(b)),
            (RealArray(a), RealArray(b)) => Comparison::Equality(a == b),
            (Node(a), Node(b)) => Comparison::Equality(a == b),
            (Edge(a), Edge(b)) => Comparison::Equality(a == b),
            _ => Comparison::Incomparable,
        }
    }

    /// Rendering as a query literal.
    pub fn literal(&self) -> String {
        match self {
            Value::Text(s) => {
                let mut out = String::from("\"");
                for c in s.chars() {
                    match c {
                        '"' => out.push_str("\\\""),
                        '\\' => out.push_str("\\\\"),
                        '\n' => out.push_str("\\n"),
                        '\t' => out.push_str("\\t"),
                        '\r' => out.push_str("\\r"),
                        c => out.push(c),
                    }
                }
                out.push('"');
                out
            }
            other => other.to_string(),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Value::Null => serde_json::Value::Null,
            Value::Bool(b) => (*b).into(),
            Value::Int(i) => (*i).into(),
            Value::Real(x) => serde_json::Number::from_f64(*x).map_or(serde_json::Value::Null, Into::into),
            Value::Text(s) => s.clone().into(),
            Value::RealArray(a) => PropertyValue::RealArray(a.clone()).to_json(),
            Value::Quantity(q) => PropertyValue::Quantity(q.clone()).to_json(),
            Value::Node(_) | Value::Edge(_) => self.to_string().into(),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => Ok(()),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Real(x) => write!(f, "{x:?}"),
            Value::Text(s) => f.write_str(s),
            Value::RealArray(a) => {
                f.write_str("[")?;
                for (i, x) in a.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{x:?}")?;
                }
                f.write_str("]")
            }
            Value::Quantity(q) => write!(f, "{:?} {}", q.magnitude, q.unit),
            Value::Node(n) => write!(f, "node:{}", n.0),
            Value::Edge(e) => write!(f, "edge:{}", e.0),
        }
    }
}

/// A total order used for grouping, DISTINCT and multiset comparison.
/// Values of different kinds order by kind; null sorts last. Int and real
/// are different kinds here, so `1` and `1.0` form separate groups.
impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        use Value::*;
        match (self, other) {
            (Bool(a), Bool(b)) => a.cmp(b),
            (Int(a), Int(b)) => a.cmp(b),
            (Real(a), Real(b)) => a.total_cmp(b),
            (Text(a), Text(b)) => a.cmp(b),
            (RealArray(a), RealArray(b)) => {
                for (x, y) in a.iter().zip(b) {
                    match x.total_cmp(y) {
                        Ordering::Equal => {}
                        o => return o,
                    }
                }
                a.len().cmp(&b.len())
            }
            (Quantity(a), Quantity(b)) => {
                a.magnitude.total_cmp(&b.magnitude).then_with(|| a.unit.cmp(&b.unit)).then_with(|| {
                    let (ka, x1, y1) = unc_key(&a.uncertainty);
                    let (kb, x2, y2) = unc_key(&b.uncertainty);
                    ka.cmp(&kb).then(x1.total_cmp(&x2)).then(y1.total_cmp(&y2))
                })
            }
            (Node(a), Node(b)) => a.cmp(b),
            (Edge(a), Edge(b)) => a.cmp(b),
            (Null, Null) => Ordering::Equal,
            _ => rank(self).cmp(&rank(other)),
        }
    }
}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Value {}

/// Ordering for ORDER BY: numbers interleave across int, real and
/// quantity magnitude; otherwise the total order applies. Null is handled
/// by the caller.
pub(crate) fn sort_cmp(a: &Value, b: &Value) -> Ordering {
    match (a.magnitude(), b.magnitude()) {
        (Some(x), Some(y)) => x.total_cmp(&y).then_with(|| a.cmp(b)),
        _ => a.cmp(b),
    }
}
