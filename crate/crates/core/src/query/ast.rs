use std::fmt;

use super::Value;

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub patterns: Vec<PathPattern>,
    pub where_clause: Option<Expr>,
    pub distinct: bool,
    pub returns: Vec<ReturnItem>,
    /// (index into `returns`, descending)
    pub order_by: Vec<(usize, bool)>,
    pub limit: Option<u64>,
}

/// `node (edge node)*`
#[derive(Debug, Clone, PartialEq)]
pub struct PathPattern {
    pub start: NodePattern,
    pub steps: Vec<(EdgePattern, NodePattern)>,
}

impl PathPattern {
    pub fn nodes(&self) -> impl Iterator<Item = &NodePattern> {
        std::iter::once(&self.start).chain(self.steps.iter().map(|(_, n)| n))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NodePattern {
    pub var: Option<String>,
    pub labels: Vec<String>,
    pub props: Vec<(String, Value)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeDirection {
    /// `-[]->`
    Right,
    /// `<-[]-`
    Left,
    /// `-[]-`
    Undirected,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgePattern {
    pub var: Option<String>,
    pub rel_type: Option<String>,
    pub props: Vec<(String, Value)>,
    pub direction: EdgeDirection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "<>",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggFn {
    Count,
    Sum,
    Avg,
    Min,
    Max,
}

impl AggFn {
    pub fn name(self) -> &'static str {
        match self {
            AggFn::Count => "COUNT",
            AggFn::Sum => "SUM",
            AggFn::Avg => "AVG",
            AggFn::Min => "MIN",
            AggFn::Max => "MAX",
        }
    }

    pub(crate) fn parse(name: &str) -> Option<Self> {
        match name.to_ascii_uppercase().as_str() {
            "COUNT" => Some(AggFn::Count),
            "SUM" => Some(AggFn::Sum),
            "AVG" => Some(AggFn::Avg),
            "MIN" => Some(AggFn::Min),
            "MAX" => Some(AggFn::Max),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Literal(Value),
    Var(String),
    Prop(String, String),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    /// Only valid as a whole return item; `None` is `*`.
    Agg(AggFn, Option<Box<Expr>>),
}

impl Expr {
    pub fn contains_aggregate(&self) -> bool {
        match self {
            Expr::Agg(..) => true,
            Expr::Literal(_) | Expr::Var(_) | Expr::Prop(..) => false,
            Expr::Cmp(_, a, b) | Expr::And(a, b) | Expr::Or(a, b) => a.contains_aggregate() || b.contains_aggregate(),
            Expr::Not(a) => a.contains_aggregate(),
        }
    }

    pub fn variables<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Literal(_) => {}
            Expr::Var(v) | Expr::Prop(v, _) => out.push(v),
            Expr::Cmp(_, a, b) | Expr::And(a, b) | Expr::Or(a, b) => {
                a.variables(out);
                b.variables(out);
            }
            Expr::Not(a) => a.variables(out),
            Expr::Agg(_, a) => {
                if let Some(a) = a {
                    a.variables(out);
                }
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Or(..) => 1,
            Expr::And(..) => 2,
            Expr::Not(_) => 3,
            Expr::Cmp(..) => 4,
            _ => 5,
        }
    }
}

fn ident(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    let plain = s.chars().next().is_some_and(|c| c.is_alphabetic() || c == '_')
        && s.chars().all(|c| c.is_alphanumeric() || c == '_');
    if plain {
        f.write_str(s)
    } else {
        write!(f, "`{s}`")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sub = |f: &mut fmt::Formatter<'_>, e: &Expr, min: u8| {
            if e.precedence() < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        match self {
            Expr::Literal(v) => write!(f, "{}", v.literal()),
            Expr::Var(v) => ident(f, v),
            Expr::Prop(v, k) => {
                ident(f, v)?;
                f.write_str(".")?;
                ident(f, k)
            }
            Expr::Cmp(op, a, b) => {
                sub(f, a, 5)?;
                write!(f, " {} ", op.symbol())?;
                sub(f, b, 5)
            }
            Expr::And(a, b) => {
                sub(f, a, 2)?;
                f.write_str(" AND ")?;
                sub(f, b, 3)
            }
            Expr::Or(a, b) => {
                sub(f, a, 1)?;
                f.write_str(" OR ")?;
                sub(f, b, 2)
            }
            Expr::Not(a) => {
                f.write_str("NOT ")?;
                sub(f, a, 3)
            }
            Expr::Agg(func, None) => write!(f, "{}(*)", func.name()),
            Expr::Agg(func, Some(a)) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnItem {
    pub expr: Expr,
    pub alias: Option<String>,
}

impl ReturnItem {
    pub fn is_aggregate(&self) -> bool {
        matches!(self.expr, Expr::Agg(..))
    }

    /// The column header: the alias, or the expression as written.
    pub fn column_name(&self) -> String {
        self.alias.clone().unwrap_or_else(|| self.expr.to_string())
    }
}
