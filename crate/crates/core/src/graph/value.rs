//! Property values stored on nodes and edges.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Map, Value as Json};

use super::GraphError;

/// Property map attached to every node and edge. Keys are kept sorted so
/// serialized forms are deterministic.
pub type PropertyMap = BTreeMap<String, PropertyValue>;

/// Probabilistic annotation carried by a [`Quantity`].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub enum Uncertainty {
    #[default]
    None,
    Uniform {
        lo: f64,
        hi: f64,
    },
    Normal {
        mean: f64,
        sd: f64,
    },
}

impl Uncertainty {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Uncertainty::None => "none",
            Uncertainty::Uniform { .. } => "uniform",
            Uncertainty::Normal { .. } => "normal",
        }
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        match *self {
            Uncertainty::None => Ok(()),
            Uncertainty::Uniform { lo, hi } => {
                finite("uniform lower bound", lo)?;
                finite("uniform upper bound", hi)?;
                if lo > hi {
                    return Err(GraphError::InvalidValue(format!(
                        "uniform uncertainty requires lo <= hi, got lo={lo} hi={hi}"
                    )));
                }
                Ok(())
            }
            Uncertainty::Normal { mean, sd } => {
                finite("normal mean", mean)?;
                finite("normal standard deviation", sd)?;
                if sd < 0.0 {
                    return Err(GraphError::InvalidValue(format!("normal uncertainty requires sd >= 0, got {sd}")));
                }
                Ok(())
            }
        }
    }

    fn to_json(self) -> Json {
        match self {
            Uncertainty::None => json!({ "kind": "none" }),
            Uncertainty::Uniform { lo, hi } => json!({ "kind": "uniform", "lo": lo, "hi": hi }),
            Uncertainty::Normal { mean, sd } => json!({ "kind": "normal", "mean": mean, "sd": sd }),
        }
    }

    fn from_json(value: &Json) -> Result<Self, String> {
        let obj = value.as_object().ok_or("uncertainty must be an object")?;
        let kind = obj.get("kind").and_then(Json::as_str).ok_or("uncertainty is missing \"kind\"")?;
        let num = |key: &str| -> Result<f64, String> {
            obj.get(key)
                .and_then(Json::as_f64)
                .ok_or_else(|| format!("{kind} uncertainty is missing numeric \"{key}\""))
        };
        match kind {
            "none" => Ok(Uncertainty::None),
            "uniform" => Ok(Uncertainty::Uniform { lo: num("lo")?, hi: num("hi")? }),
            "normal" => Ok(Uncertainty::Normal { mean: num("mean")?, sd: num("sd")? }),
            other => Err(format!("unknown uncertainty kind {other:?}")),
        }
    }
}

/// A physical amount with a unit symbol and an optional distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Quantity {
    pub magnitude: f64,
    pub unit: String,
    pub uncertainty: Uncertainty,
}

impl Quantity {
    pub fn new(magnitude: f64, unit: impl Into<String>) -> Self {
        Quantity { magnitude, unit: unit.into(), uncertainty: Uncertainty::None }
    }

    pub fn with_uncertainty(mut self, uncertainty: Uncertainty) -> Self {
        self.uncertainty = uncertainty;
        self
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        finite("quantity magnitude", self.magnitude)?;
        if self.unit.is_empty() {
            return Err(GraphError::InvalidValue("quantity unit must be non-empty".into()));
        }
        self.uncertainty.validate()
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.magnitude, self.unit)
    }
}

/// The kinds of value a property may hold. Used by schema declarations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ValueKind {
    Text,
    Int,
    Real,
    Bool,
    RealArray,
    Quantity,
}

impl ValueKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ValueKind::Text => "text",
            ValueKind::Int => "int",
            ValueKind::Real => "real",
            ValueKind::Bool => "bool",
            ValueKind::RealArray => "realarray",
            ValueKind::Quantity => "quantity",
        }
    }

    pub fn parse(s: &str) -> Option<ValueKind> {
        Some(match s {
            "text" => ValueKind::Text,
            "int" => ValueKind::Int,
            "real" => ValueKind::Real,
            "bool" => ValueKind::Bool,
            "realarray" => ValueKind::RealArray,
            "quantity" => ValueKind::Quantity,
            _ => return None,
        })
    }
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PropertyValue {
    Text(String),
    Int(i64),
    Real(f64),
    Bool(bool),
    RealArray(Vec<f64>),
    Quantity(Quantity),
}

impl PropertyValue {
    pub fn kind(&self) -> ValueKind {
        match self {
            PropertyValue::Text(_) => ValueKind::Text,
            PropertyValue::Int(_) => ValueKind::Int,
            PropertyValue::Real(_) => ValueKind::Real,
            PropertyValue::Bool(_) => ValueKind::Bool,
            PropertyValue::RealArray(_) => ValueKind::RealArray,
            PropertyValue::Quantity(_) => ValueKind::Quantity,
        }
    }

    /// Rejects NaN and infinities anywhere inside the value.
    pub fn validate(&self) -> Result<(), GraphError> {
        match self {
            PropertyValue::Real(x) => finite("real value", *x),
            PropertyValue::RealArray(xs) => xs.iter().try_for_each(|x| finite("array element", *x)),
            PropertyValue::Quantity(q) => q.validate(),
            _ => Ok(()),
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            PropertyValue::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_quantity(&self) -> Option<&Quantity> {
        match self {
            PropertyValue::Quantity(q) => Some(q),
            _ => None,
        }
    }

    /// Snapshot/JSON encoding. Ints are JSON integers, reals are always
    /// written with a fraction or exponent so the two never collide.
    pub fn to_json(&self) -> Json {
        match self {
            PropertyValue::Text(s) => Json::String(s.clone()),
            PropertyValue::Int(i) => Json::from(*i),
            PropertyValue::Real(x) => Json::from(*x),
            PropertyValue::Bool(b) => Json::Bool(*b),
            PropertyValue::RealArray(xs) => Json::Array(xs.iter().map(|x| Json::from(*x)).collect()),
            PropertyValue::Quantity(q) => {
                let mut m = Map::new();
                m.insert("q".into(), Json::from(q.magnitude));
                m.insert("u".into(), Json::String(q.unit.clone()));
                m.insert("unc".into(), q.uncertainty.to_json());
                Json::Object(m)
            }
        }
    }

    pub fn from_json(value: &Json) -> Result<Self, String> {
        let v = match value {
            Json::String(s) => PropertyValue::Text(s.clone()),
            Json::Bool(b) => PropertyValue::Bool(*b),
            Json::Number(n) => {
                if let Some(i) = n.as_i64() {
                    PropertyValue::Int(i)
                } else if n.is_u64() {
                    return Err(format!("integer {n} out of range"));
                } else {
                    PropertyValue::Real(n.as_f64().ok_or("unrepresentable number")?)
                }
            }
            Json::Array(items) => PropertyValue::RealArray(
                items
                    .iter()
                    .map(|x| x.as_f64().ok_or_else(|| format!("array element {x} is not a number")))
                    .collect::<Result<_, _>>()?,
            ),
            Json::Object(obj) => {
                let magnitude = obj.get("q").and_then(Json::as_f64).ok_or("quantity is missing numeric \"q\"")?;
                let unit = obj.get("u").and_then(Json::as_str).ok_or("quantity is missing text \"u\"")?.to_string();
                let uncertainty = match obj.get("unc") {
                    Some(u) => Uncertainty::from_json(u)?,
                    None => Uncertainty::None,
                };
                PropertyValue::Quantity(Quantity { magnitude, unit, uncertainty })
            }
            Json::Null => return Err("null is not a property value".into()),
        };
        v.validate().map_err(|e| e.to_string())?;
        Ok(v)
    }

    /// Lexical form used for typed literals in the triple encoding.
    pub fn lexical(&self) -> String {
        match self {
            PropertyValue::Text(s) => s.clone(),
            PropertyValue::Int(i) => i.to_string(),
            PropertyValue::Real(x) => format_real(*x),
            PropertyValue::Bool(b) => b.to_string(),
            PropertyValue::RealArray(_) | PropertyValue::Quantity(_) => self.to_json().to_string(),
        }
    }

    pub fn from_lexical(kind: ValueKind, lexical: &str) -> Result<Self, String> {
        let v = match kind {
            ValueKind::Text => PropertyValue::Text(lexical.to_string()),
            ValueKind::Int => {
                PropertyValue::Int(lexical.parse().map_err(|_| format!("invalid int literal {lexical:?}"))?)
            }
            ValueKind::Real => {
                PropertyValue::Real(lexical.parse().map_err(|_| format!("invalid real literal {lexical:?}"))?)
            }
            ValueKind::Bool => match lexical {
                "true" => PropertyValue::Bool(true),
                "false" => PropertyValue::Bool(false),
                _ => return Err(format!("invalid bool literal {lexical:?}")),
            },
            ValueKind::RealArray | ValueKind::Quantity => {
                let json: Json =
                    serde_json::from_str(lexical).map_err(|e| format!("invalid {kind} literal {lexical:?}: {e}"))?;
                let v = PropertyValue::from_json(&json)?;
                if v.kind() != kind {
                    return Err(format!("literal {lexical:?} is not a {kind}"));
                }
                v
            }
        };
        v.validate().map_err(|e| e.to_string())?;
        Ok(v)
    }
}

/// Shortest round-tripping decimal form, always containing a `.` or `e`.
fn format_real(x: f64) -> String {
    format!("{x:?}")
}

fn finite(what: &str, x: f64) -> Result<(), GraphError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(GraphError::InvalidValue(format!("{what} must be finite, got {x}")))
    }
}

impl fmt::Display for PropertyValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PropertyValue::Text(s) => f.write_str(s),
            PropertyValue::Int(i) => write!(f, "{i}"),
            PropertyValue::Real(x) => write!(f, "{x}"),
            PropertyValue::Bool(b) => write!(f, "{b}"),
            PropertyValue::RealArray(_) => write!(f, "{}", self.to_json()),
            PropertyValue::Quantity(q) => write!(f, "{q}"),
        }
    }
}

impl From<&str> for PropertyValue {
    fn from(s: &str) -> Self {
        PropertyValue::Text(s.to_string())
    }
}

impl From<String> for PropertyValue {
    fn from(s: String) -> Self {
        PropertyValue::Text(s)
    }
}

impl From<i64> for PropertyValue {
    fn from(i: i64) -> Self {
        PropertyValue::Int(i)
    }
}

impl From<f64> for PropertyValue {
    fn from(x: f64) -> Self {
        PropertyValue::Real(x)
    }
}

impl From<bool> for PropertyValue {
    fn from(b: bool) -> Self {
        PropertyValue::Bool(b)
    }
}

impl From<Vec<f64>> for PropertyValue {
    fn from(xs: Vec<f64>) -> Self {
        PropertyValue::RealArray(xs)
    }
}

impl From<Quantity> for PropertyValue {
    fn from(q: Quantity) -> Self {
        PropertyValue::Quantity(q)
    }
}

impl Serialize for PropertyValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PropertyValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let json = Json::deserialize(deserializer)?;
        PropertyValue::from_json(&json).map_err(D::Error::custom)
    }
}

/// Builds a [`PropertyMap`] from `(key, value)` pairs.
///
/// ```
/// use lcag_core::graph::props;
/// let p = props([("name", "glucose".into()), ("kind", "intermediate".into())]);
/// assert_eq!(p.len(), 2);
/// ```
pub fn props<K, I>(pairs: I) -> PropertyMap
where
    K: Into<String>,
    I: IntoIterator<Item = (K, PropertyValue)>,
{
    pairs.into_iter().map(|(k, v)| (k.into(), v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite() {
        assert!(PropertyValue::Real(f64::NAN).validate().is_err());
        assert!(PropertyValue::RealArray(vec![1.0, f64::INFINITY]).validate().is_err());
        assert!(PropertyValue::Quantity(Quantity::new(f64::NEG_INFINITY, "kg")).validate().is_err());
        assert!(PropertyValue::RealArray(vec![]).validate().is_ok());
    }

    #[test]
    fn uncertainty_bounds() {
        assert!(Uncertainty::Uniform { lo: 2.0, hi: 1.0 }.validate().is_err());
        assert!(Uncertainty::Normal { mean: 1.0, sd: -0.1 }.validate().is_err());
        assert!(Uncertainty::Normal { mean: 1.0, sd: 0.0 }.validate().is_ok());
        assert!(Quantity::new(1.0, "").validate().is_err());
    }

    #[test]
    fn json_keeps_int_and_real_apart() {
        let int = PropertyValue::Int(1);
        let real = PropertyValue::Real(1.0);
        assert_eq!(int.to_json().to_string(), "1");
        assert_eq!(real.to_json().to_string(), "1.0");
        assert_eq!(PropertyValue::from_json(&real.to_json()).unwrap(), real);
        assert_eq!(PropertyValue::from_json(&int.to_json()).unwrap(), int);
    }

    #[test]
    fn quantity_json_shape() {
        let q = PropertyValue::Quantity(
            Quantity::new(1.5, "kg").with_uncertainty(Uncertainty::Uniform { lo: 1.0, hi: 2.0 }),
        );
        assert_eq!(q.to_json().to_string(), r#"{"q":1.5,"u":"kg","unc":{"hi":2.0,"kind":"uniform","lo":1.0}}"#);
        assert_eq!(PropertyValue::from_json(&q.to_json()).unwrap(), q);
    }

    #[test]
    fn lexical_round_trip() {
        let values = [
            PropertyValue::Text("a \"b\"".into()),
            PropertyValue::Int(-7),
            PropertyValue::Real(0.1),
            PropertyValue::Real(1e300),
            PropertyValue::Bool(false),
            PropertyValue::RealArray(vec![]),
            PropertyValue::RealArray(vec![1.0, -2.5]),
            PropertyValue::Quantity(
                Quantity::new(3.0, "MJ").with_uncertainty(Uncertainty::Normal { mean: 3.0, sd: 0.2 }),
            ),
        ];
        for v in values {
            let back = PropertyValue::from_lexical(v.kind(), &v.lexical()).unwrap();
            assert_eq!(back, v);
        }
    }
}
