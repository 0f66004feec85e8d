//! Pattern-matching queries.
//!
//! ```text
//! MATCH (w:Workflow)-[:HAS_STEP]->(a)-[e:HAS_OUTPUT]->(f:Flow {name: "succinic acid"})
//! WHERE e.amount > 0.1
//! RETURN w.id, SUM(e.amount) AS total
//! ORDER BY total DESC LIMIT 5
//! ```
//!
//! Node variables bind homomorphically (two variables may land on the same
//! node) while every edge in one MATCH binds a distinct edge. Missing
//! properties evaluate to null and any comparison with null is false.
//! Quantities compare with plain numbers by magnitude and with each other
//! only when their units agree.

mod ast;
mod exec;
mod lexer;
mod parser;
mod plan;
mod value;

use std::fmt::Write as _;

use thiserror::Error;

pub use ast::{AggFn, CmpOp, EdgeDirection, EdgePattern, Expr, NodePattern, PathPattern, Query, ReturnItem};
pub use exec::execute_plan;
pub use parser::parse_query;
pub use plan::{naive_plan, plan_query, GraphStats, Plan, Step};
pub use value::{Comparison, Value};

use crate::graph::Graph;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QueryError {
    #[error("syntax error at line {line}, column {col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("invalid query: {0}")]
    Semantic(String),
    #[error("query failed: {0}")]
    Runtime(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl ResultTable {
    /// Rows sorted by the total value order, for multiset comparison.
    pub fn sorted_rows(&self) -> Vec<Vec<Value>> {
        let mut rows = self.rows.clone();
        rows.sort();
        rows
    }

    /// CSV with a header line. Nulls are empty fields.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.to_string())).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    /// One JSON object per row, keys in column order.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            out.push('{');
            for (i, (col, v)) in self.columns.iter().zip(row).enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{}:{}", serde_json::Value::from(col.as_str()), v.to_json());
            }
            out.push_str("}\n");
        }
        out
    }
}

/// Plans against the graph's label statistics and runs.
pub fn execute_query(query: &Query, graph: &Graph) -> Result<ResultTable, QueryError> {
    execute_plan(&plan_query(query, graph), graph)
}

/// Parse, plan and run in one call.
pub fn run_query(text: &str, graph: &Graph) -> Result<ResultTable, QueryError> {
    execute_query(&parse_query(text)?, graph)
}
