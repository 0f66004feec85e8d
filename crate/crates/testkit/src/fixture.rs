//! The two-publication fixture bundle under `fixtures/two_publications`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use lcag_core::graph::Graph;
use lcag_core::ingest::ingest_bundle;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;

pub const TABLES: [&str; 4] = ["workflow", "metadata", "agent", "reference"];

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/two_publications")
}

/// Table name to CSV text.
pub fn bundle() -> BTreeMap<String, String> {
    TABLES
        .iter()
        .map(|t| {
            let path = fixture_dir().join(format!("{t}.csv"));
            let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            (t.to_string(), text)
        })
        .collect()
}

pub fn graph() -> Graph {
    let mut g = Graph::new();
    let summary = ingest_bundle(&mut g, &bundle()).expect("fixture ingests");
    assert!(summary.row_errors.is_empty(), "{:?}", summary.row_errors);
    g
}

/// Shuffles the data rows of every table, keeping each header first. The
/// fixture has no quoted line breaks, so lines are records.
pub fn permuted(bundle: &BTreeMap<String, String>, rng: &mut StdRng) -> BTreeMap<String, String> {
    bundle
        .iter()
        .map(|(t, text)| {
            let mut lines: Vec<&str> = text.lines().collect();
            lines[1..].shuffle(rng);
            (t.clone(), lines.join("\n") + "\n")
        })
        .collect()
}

/// Per-workflow succinic acid output, summed straight from workflow.csv.
pub fn yields_from_csv() -> BTreeMap<String, f64> {
    let text = std::fs::read_to_string(fixture_dir().join("workflow.csv")).unwrap();
    let mut out = BTreeMap::new();
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f[4] == "output" && f[5] == "succinic acid" {
            *out.entry(f[0].to_string()).or_insert(0.0) += f[7].parse::<f64>().unwrap();
        }
    }
    out
}

pub const YIELD_QUERY: &str = r#"MATCH (w:Workflow)-[:HAS_STEP]->(a:Activity)-[e:HAS_OUTPUT]->(f:Flow {name: "succinic acid"})
RETURN w.id AS workflow, SUM(e.amount) AS total
ORDER BY workflow"#;
