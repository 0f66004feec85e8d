use std::collections::BTreeMap;

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::{QueryError, Value};

/// Parses and checks a query.
pub fn parse_query(text: &str) -> Result<Query, QueryError> {
    let mut p = Parser { toks: tokenize(text)?, pos: 0 };
    let q = p.query()?;
    check(&q)?;
    Ok(q)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, expected: &str) -> Result<T, QueryError> {
        let t = &self.toks[self.pos];
        Err(QueryError::Syntax {
            line: t.line,
            col: t.col,
            message: format!("expected {expected}, found {}", t.tok.describe()),
        })
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s.eq_ignore_ascii_case(kw))
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), QueryError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.error(kw)
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &Tok) -> Result<(), QueryError> {
        if self.eat(tok) {
            Ok(())
        } else {
            self.error(&tok.describe())
        }
    }

    fn name(&mut self, what: &str) -> Result<String, QueryError> {
        match self.peek().clone() {
            Tok::Ident(s) | Tok::Quoted(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.error(what),
        }
    }

    fn query(&mut self) -> Result<Query, QueryError> {
        // a bare RETURN evaluates its items once, over no bindings
        let mut patterns = Vec::new();
        if !self.is_kw("RETURN") {
            self.expect_kw("MATCH")?;
            patterns.push(self.path()?);
            while self.eat(&Tok::Comma) {
                patterns.push(self.path()?);
            }
        }
        let where_clause = if self.eat_kw("WHERE") { Some(self.expr()?) } else { None };
        if !self.is_kw("RETURN") {
            return self.error(if where_clause.is_some() { "RETURN" } else { "',', WHERE or RETURN" });
        }
        self.bump();
        let distinct = self.eat_kw("DISTINCT");
        let mut returns = vec![self.return_item()?];
        while self.eat(&Tok::Comma) {
            returns.push(self.return_item()?);
        }
        let mut order_by = Vec::new();
        if self.eat_kw("ORDER") {
            self.expect_kw("BY")?;
            loop {
                order_by.push(self.order_item(&returns)?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        let limit = if self.eat_kw("LIMIT") {
            match self.peek().clone() {
                Tok::Int(n) if n >= 0 => {
                    self.bump();
                    Some(n as u64)
                }
                _ => return self.error("a non-negative integer"),
            }
        } else {
            None
        };
        if *self.peek() != Tok::Eof {
            return self.error(if limit.is_some() {
                "end of query"
            } else if !order_by.is_empty() {
                "',', LIMIT or end of query"
            } else {
                "',', ORDER BY, LIMIT or end of query"
            });
        }
        Ok(Query { patterns, where_clause, distinct, returns, order_by, limit })
    }

    fn path(&mut self) -> Result<PathPattern, QueryError> {
        let start = self.node()?;
        let mut steps = Vec::new();
        while matches!(self.peek(), Tok::Dash | Tok::Lt) {
            let edge = self.edge()?;
            steps.push((edge, self.node()?));
        }
        Ok(PathPattern { start, steps })
    }

    fn node(&mut self) -> Result<NodePattern, QueryError> {
        self.expect(&Tok::LParen)?;
        let mut n = NodePattern::default();
        if matches!(self.peek(), Tok::Ident(_) | Tok::Quoted(_)) {
            n.var = Some(self.name("variable")?);
        }
        while self.eat(&Tok::Colon) {
            n.labels.push(self.name("label")?);
        }
        if *self.peek() == Tok::LBrace {
            n.props = self.prop_map()?;
        }
        if *self.peek() != Tok::RParen {
            return self.error("':', '{' or ')'");
        }
        self.bump();
        Ok(n)
    }

    fn edge(&mut self) -> Result<EdgePattern, QueryError> {
        let left = self.eat(&Tok::Lt);
        self.expect(&Tok::Dash)?;
        self.expect(&Tok::LBracket)?;
        let mut var = None;
        if matches!(self.peek(), Tok::Ident(_) | Tok::Quoted(_)) {
            var = Some(self.name("variable")?);
        }
        let rel_type = if self.eat(&Tok::Colon) { Some(self.name("relationship type")?) } else { None };
        let props = if *self.peek() == Tok::LBrace { self.prop_map()? } else { Vec::new() };
        if *self.peek() != Tok::RBracket {
            return self.error("':', '{' or ']'");
        }
        self.bump();
        self.expect(&Tok::Dash)?;
        let direction = if left {
            EdgeDirection::Left
        } else if self.eat(&Tok::Gt) {
            EdgeDirection::Right
        } else {
            EdgeDirection::Undirected
        };
        if left && *self.peek() == Tok::Gt {
            return self.error("'(' (an edge cannot point both ways)");
        }
        Ok(EdgePattern { var, rel_type, props, direction })
    }

    fn prop_map(&mut self) -> Result<Vec<(String, Value)>, QueryError> {
        self.expect(&Tok::LBrace)?;
        let mut props = Vec::new();
        if self.eat(&Tok::RBrace) {
            return Ok(props);
        }
        loop {
            let key = self.name("property key")?;
            self.expect(&Tok::Colon)?;
            let value = match self.literal() {
                Some(v) => v,
                None => return self.error("a literal"),
            };
            props.push((key, value));
            if self.eat(&Tok::RBrace) {
                return Ok(props);
            }
            if !self.eat(&Tok::Comma) {
                return self.error("',' or '}'");
            }
        }
    }

    /// Consumes a literal if one starts here.
    fn literal(&mut self) -> Option<Value> {
        let v = match (self.peek().clone(), self.peek_at(1).clone()) {
            (Tok::Str(s), _) => Value::Text(s),
            (Tok::Int(i), _) => Value::Int(i),
            (Tok::Real(x), _) => Value::Real(x),
            (Tok::Dash, Tok::Int(i)) => {
                self.bump();
                Value::Int(-i)
            }
            (Tok::Dash, Tok::Real(x)) => {
                self.bump();
                Value::Real(-x)
            }
            (Tok::Ident(s), next) if next != Tok::Dot && s.eq_ignore_ascii_case("true") => Value::Bool(true),
            (Tok::Ident(s), next) if next != Tok::Dot && s.eq_ignore_ascii_case("false") => Value::Bool(false),
            _ => return None,
        };
        self.bump();
        Some(v)
    }

    fn return_item(&mut self) -> Result<ReturnItem, QueryError> {
        let start = self.pos;
        let expr = self.expr()?;
        if expr.contains_aggregate() && !matches!(expr, Expr::Agg(..)) {
            let t = &self.toks[start];
            return Err(QueryError::Syntax {
                line: t.line,
                col: t.col,
                message: "an aggregate must be a whole RETURN item".into(),
            });
        }
        let alias = if self.eat_kw("AS") { Some(self.name("alias")?) } else { None };
        Ok(ReturnItem { expr, alias })
    }

    fn order_item(&mut self, returns: &[ReturnItem]) -> Result<(usize, bool), QueryError> {
        let start = &self.toks[self.pos];
        let (line, col) = (start.line, start.col);
        let expr = self.expr()?;
        let desc = if self.eat_kw("DESC") {
            true
        } else {
            self.eat_kw("ASC");
            false
        };
        let by_alias = match &expr {
            Expr::Var(v) => returns.iter().position(|r| r.alias.as_deref() == Some(v)),
            _ => None,
        };
        match by_alias.or_else(|| returns.iter().position(|r| r.expr == expr)) {
            Some(i) => Ok((i, desc)),
            None => {
                Err(QueryError::Syntax { line, col, message: format!("ORDER BY {expr} does not name a RETURN item") })
            }
        }
    }

    fn expr(&mut self) -> Result<Expr, QueryError> {
        let mut e = self.and_expr()?;
        while self.eat_kw("OR") {
            e = Expr::Or(Box::new(e), Box::new(self.and_expr()?));
        }
        Ok(e)
    }

    fn and_expr(&mut self) -> Result<Expr, QueryError> {
        let mut e = self.not_expr()?;
        while self.eat_kw("AND") {
            e = Expr::And(Box::new(e), Box::new(self.not_expr()?));
        }
        Ok(e)
    }

    fn not_expr(&mut self) -> Result<Expr, QueryError> {
        if self.is_kw("NOT") && !matches!(self.peek_at(1), Tok::Dot) {
            self.bump();
            return Ok(Expr::Not(Box::new(self.not_expr()?)));
        }
        self.cmp_expr()
    }

    fn cmp_expr(&mut self) -> Result<Expr, QueryError> {
        let left = self.primary()?;
        let op = match self.peek() {
            Tok::Eq => CmpOp::Eq,
            Tok::Ne => CmpOp::Ne,
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::Gt => CmpOp::Gt,
            Tok::Ge => CmpOp::Ge,
            _ => return Ok(left),
        };
        self.bump();
        let right = self.primary()?;
        Ok(Expr::Cmp(op, Box::new(left), Box::new(right)))
    }

    fn primary(&mut self) -> Result<Expr, QueryError> {
        if let Some(v) = self.literal() {
            return Ok(Expr::Literal(v));
        }
        if self.eat(&Tok::LParen) {
            let e = self.expr()?;
            self.expect(&Tok::RParen)?;
            return Ok(e);
        }
        let is_call = matches!(self.peek(), Tok::Ident(_)) && *self.peek_at(1) == Tok::LParen;
        let name = self.name("an expression")?;
        if is_call {
            let Some(func) = AggFn::parse(&name) else {
                self.pos -= 1;
                return self.error("COUNT, SUM, AVG, MIN or MAX");
            };
            self.expect(&Tok::LParen)?;
            let arg = if func == AggFn::Count && self.eat(&Tok::Star) {
                None
            } else {
                let arg = self.expr()?;
                if arg.contains_aggregate() {
                    return self.error("a non-aggregate argument");
                }
                Some(Box::new(arg))
            };
            self.expect(&Tok::RParen)?;
            return Ok(Expr::Agg(func, arg));
        }
        if self.eat(&Tok::Dot) {
            let key = self.name("property key")?;
            return Ok(Expr::Prop(name, key));
        }
        Ok(Expr::Var(name))
    }
}

#[derive(Clone, Copy, PartialEq)]
enum VarKind {
    Node,
    Edge,
}

fn check(q: &Query) -> Result<(), QueryError> {
    let mut vars: BTreeMap<&str, VarKind> = BTreeMap::new();
    let semantic = |m: String| Err(QueryError::Semantic(m));
    for path in &q.patterns {
        for n in path.nodes() {
            if let Some(v) = &n.var {
                if vars.insert(v, VarKind::Node) == Some(VarKind::Edge) {
                    return semantic(format!("variable {v} is used for both a node and an edge"));
                }
            }
        }
        for (e, _) in &path.steps {
            if let Some(v) = &e.var {
                match vars.insert(v, VarKind::Edge) {
                    Some(VarKind::Node) => {
                        return semantic(format!("variable {v} is used for both a node and an edge"))
                    }
                    Some(VarKind::Edge) => return semantic(format!("edge variable {v} is bound more than once")),
                    None => {}
                }
            }
        }
    }
    let mut used = Vec::new();
    if let Some(w) = &q.where_clause {
        if w.contains_aggregate() {
            return semantic("aggregate functions are not allowed in WHERE".into());
        }
        w.variables(&mut used);
    }
    for r in &q.returns {
        r.expr.variables(&mut used);
    }
    if let Some(v) = used.into_iter().find(|v| !vars.contains_key(v)) {
        return semantic(format!("variable {v} is not bound in MATCH"));
    }
    Ok(())
}
