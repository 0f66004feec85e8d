//! Seeded random graphs and mutation sequences.

use std::collections::{BTreeMap, BTreeSet};

use lcag_core::graph::{
    Change, Direction, Edge, EdgeId, EntityId, Graph, NodeId, PropertyMap, PropertyValue, Quantity, Uncertainty,
};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

pub const QUERY_LABELS: [&str; 3] = ["A", "B", "C"];
pub const QUERY_RELS: [&str; 3] = ["R", "S", "T"];
pub const QUERY_NAMES: [&str; 3] = ["a", "b", "c"];

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Reals are multiples of 1/4 so sums are exact in any order.
fn quarter(rng: &mut StdRng) -> f64 {
    rng.gen_range(0..16) as f64 / 4.0
}

/// A graph shaped for query testing: labels A/B/C, relationship types
/// R/S/T, node keys `k` (int), `x` (real), `name` (text) and `w` (kg
/// quantity), edge keys `k` and `w`. Self-loops and parallel edges occur.
pub fn query_graph(rng: &mut StdRng, max_nodes: usize, max_edges: usize) -> Graph {
    let mut g = Graph::new();
    let n = rng.gen_range(1..=max_nodes);
    let mut ids = Vec::with_capacity(n);
    for _ in 0..n {
        let labels: Vec<&str> = QUERY_LABELS.iter().copied().filter(|_| rng.gen_bool(0.4)).collect();
        let mut p = PropertyMap::new();
        if rng.gen_bool(0.8) {
            p.insert("k".into(), PropertyValue::Int(rng.gen_range(0..5)));
        }
        if rng.gen_bool(0.7) {
            p.insert("x".into(), PropertyValue::Real(quarter(rng)));
        }
        if rng.gen_bool(0.7) {
            p.insert("name".into(), PropertyValue::Text(QUERY_NAMES.choose(rng).unwrap().to_string()));
        }
        if rng.gen_bool(0.5) {
            p.insert("w".into(), Quantity::new(quarter(rng), "kg").into());
        }
        ids.push(g.create_node(labels, p).unwrap());
    }
    let m = rng.gen_range(0..=max_edges);
    for _ in 0..m {
        let (a, b) = (*ids.choose(rng).unwrap(), *ids.choose(rng).unwrap());
        let mut p = PropertyMap::new();
        if rng.gen_bool(0.7) {
            p.insert("w".into(), Quantity::new(quarter(rng), "kg").into());
        }
        if rng.gen_bool(0.5) {
            p.insert("k".into(), PropertyValue::Int(rng.gen_range(0..5)));
        }
        g.create_edge(QUERY_RELS.choose(rng).unwrap(), a, b, p).unwrap();
    }
    g
}

const AWKWARD_TEXT: [&str; 10] = [
    "",
    "plain",
    "with space",
    "quote \" and backslash \\",
    "line\nbreak\ttab\r",
    "ünïcødé ✓ 炭素",
    "<angle> & 'single'",
    "_:b0",
    "\"^^<http://example.org/x>",
    "trailing space ",
];

fn real(rng: &mut StdRng) -> f64 {
    match rng.gen_range(0..6) {
        0 => 0.0,
        1 => -0.0,
        2 => rng.gen_range(-1e6..1e6),
        3 => 1e-300 * rng.gen_range(1.0..10.0),
        4 => 0.1 + 0.2,
        _ => rng.gen_range(-10i32..10) as f64 / 3.0,
    }
}

fn uncertainty(rng: &mut StdRng) -> Uncertainty {
    match rng.gen_range(0..3) {
        0 => Uncertainty::None,
        1 => {
            let lo = real(rng);
            Uncertainty::Uniform { lo, hi: lo + rng.gen_range(0.0..5.0) }
        }
        _ => Uncertainty::Normal { mean: real(rng), sd: rng.gen_range(0.0..3.0) },
    }
}

pub fn rich_value(rng: &mut StdRng) -> PropertyValue {
    match rng.gen_range(0..6) {
        0 => PropertyValue::Text(AWKWARD_TEXT.choose(rng).unwrap().to_string()),
        1 => PropertyValue::Int(match rng.gen_range(0..4) {
            0 => i64::MIN,
            1 => i64::MAX,
            _ => rng.gen_range(-1000..1000),
        }),
        2 => PropertyValue::Real(real(rng)),
        3 => PropertyValue::Bool(rng.gen()),
        4 => PropertyValue::RealArray((0..rng.gen_range(0..5)).map(|_| real(rng)).collect()),
        _ => {
            let unit = ["kg", "MJ", "m3", "kg CO2-eq", "1", "µg/m³"].choose(rng).unwrap().to_string();
            Quantity::new(real(rng), unit).with_uncertainty(uncertainty(rng)).into()
        }
    }
}

fn rich_props(rng: &mut StdRng) -> PropertyMap {
    let keys = ["id", "name", "amount", "a key", "ключ", "x:y", "values"];
    (0..rng.gen_range(0..5)).map(|_| (keys.choose(rng).unwrap().to_string(), rich_value(rng))).collect()
}

/// A graph exercising every value kind, awkward strings, multi-label nodes,
/// bare nodes and id gaps left by deletions.
pub fn rich_graph(rng: &mut StdRng, max_nodes: usize) -> Graph {
    let labels = ["Activity", "Flow", "Workflow", "Odd Label", "ns:Thing", "Ü"];
    let rels = ["HAS_INPUT", "NEXT", "rel with space", "r:x"];
    let mut g = Graph::new();
    let mut ids = Vec::new();
    for _ in 0..rng.gen_range(0..=max_nodes) {
        let ls: Vec<&str> = labels.iter().copied().filter(|_| rng.gen_bool(0.25)).collect();
        ids.push(g.create_node(ls, rich_props(rng)).unwrap());
    }
    if !ids.is_empty() {
        for _ in 0..rng.gen_range(0..=ids.len() * 2) {
            let (a, b) = (*ids.choose(rng).unwrap(), *ids.choose(rng).unwrap());
            g.create_edge(rels.choose(rng).unwrap(), a, b, rich_props(rng)).unwrap();
        }
    }
    // punch holes in the id space
    let nodes: Vec<NodeId> = g.nodes().map(|n| n.id()).collect();
    for id in nodes {
        if rng.gen_bool(0.1) {
            g.delete(id.into(), true).unwrap();
        }
    }
    let edges: Vec<EdgeId> = g.edges().map(|e| e.id()).collect();
    for id in edges {
        if rng.gen_bool(0.1) {
            g.delete(id.into(), false).unwrap();
        }
    }
    g
}

/// One random mutation, as a description of what was done.
pub fn random_mutation(g: &mut Graph, rng: &mut StdRng) -> String {
    let labels = ["A", "B", "C", "D"];
    let rels = ["R", "S"];
    let nodes: Vec<NodeId> = g.nodes().map(|n| n.id()).collect();
    let edges: Vec<EdgeId> = g.edges().map(|e| e.id()).collect();
    let pick_node = |rng: &mut StdRng| nodes.choose(rng).copied();
    match rng.gen_range(0..10) {
        0..=2 => {
            let ls: Vec<&str> = labels.iter().copied().filter(|_| rng.gen_bool(0.3)).collect();
            let id = g.create_node(ls, PropertyMap::new()).unwrap();
            format!("create {id}")
        }
        3..=4 => match (pick_node(rng), pick_node(rng)) {
            (Some(a), Some(b)) => {
                let id = g.create_edge(rels.choose(rng).unwrap(), a, b, PropertyMap::new()).unwrap();
                format!("create {id} {a}->{b}")
            }
            _ => "noop".into(),
        },
        5 => match pick_node(rng) {
            Some(n) => {
                g.delete(n.into(), true).unwrap();
                format!("detach delete {n}")
            }
            None => "noop".into(),
        },
        6 => match edges.choose(rng) {
            Some(&e) => {
                g.delete(e.into(), false).unwrap();
                format!("delete {e}")
            }
            None => "noop".into(),
        },
        7 => match pick_node(rng) {
            Some(n) => {
                let l = labels.choose(rng).unwrap().to_string();
                g.update(n.into(), Change::AddLabel(l.clone())).unwrap();
                format!("label {n} +{l}")
            }
            None => "noop".into(),
        },
        8 => match pick_node(rng) {
            Some(n) => {
                let l = labels.choose(rng).unwrap().to_string();
                g.update(n.into(), Change::RemoveLabel(l.clone())).unwrap();
                format!("label {n} -{l}")
            }
            None => "noop".into(),
        },
        _ => {
            let target: Option<EntityId> =
                if rng.gen() { pick_node(rng).map(Into::into) } else { edges.choose(rng).map(|&e| e.into()) };
            match target {
                Some(t) => {
                    g.update(t, Change::SetProperty("k".into(), PropertyValue::Int(rng.gen_range(0..3)))).unwrap();
                    format!("set {t}.k")
                }
                None => "noop".into(),
            }
        }
    }
}

/// Compares the label index and adjacency lists against full scans and
/// returns every disagreement.
pub fn index_discrepancies(g: &Graph) -> Vec<String> {
    let mut out = Vec::new();
    let mut labels: BTreeSet<String> = g.nodes().flat_map(|n| n.labels().iter().cloned()).collect();
    labels.insert("never-used".into());
    for l in &labels {
        let indexed: BTreeSet<NodeId> = g.nodes_with_label(l).collect();
        let scanned: BTreeSet<NodeId> = g.nodes().filter(|n| n.has_label(l)).map(|n| n.id()).collect();
        if indexed != scanned {
            out.push(format!("label {l}: index {indexed:?} scan {scanned:?}"));
        }
        if g.label_cardinality(l) != scanned.len() {
            out.push(format!("label {l}: cardinality {} scan {}", g.label_cardinality(l), scanned.len()));
        }
    }
    // one pass over the edge store gives every node's incident edges
    let mut incident: BTreeMap<NodeId, Vec<&Edge>> = g.nodes().map(|n| (n.id(), Vec::new())).collect();
    for e in g.edges() {
        for end in [e.src(), e.dst()] {
            match incident.get_mut(&end) {
                Some(list) => list.push(e),
                None => out.push(format!("{} ends at missing node {end}", e.id())),
            }
        }
    }
    let mut rels: Vec<Option<&str>> = g.edges().map(|e| Some(e.rel_type())).collect();
    rels.sort();
    rels.dedup();
    rels.push(None);
    rels.push(Some("never-used"));
    for (&n, edges) in &incident {
        for dir in [Direction::Out, Direction::In, Direction::Both] {
            for &rel in &rels {
                let mut got = g.neighbors(n, dir, rel).unwrap();
                got.sort();
                let mut want: Vec<(EdgeId, NodeId)> = edges
                    .iter()
                    .filter(|e| rel.is_none_or(|r| r == e.rel_type()))
                    .filter_map(|e| {
                        if e.src() == n && dir != Direction::In {
                            Some((e.id(), e.dst()))
                        } else if e.dst() == n && dir != Direction::Out {
                            Some((e.id(), e.src()))
                        } else {
                            None
                        }
                    })
                    .collect();
                want.sort();
                // a self-loop was pushed once per end; Both reports it once
                want.dedup();
                if got != want {
                    out.push(format!("neighbors({n}, {dir:?}, {rel:?}): {got:?} != {want:?}"));
                }
            }
        }
        if g.degree(n) != Some(edges.len()) {
            out.push(format!("degree({n}) {:?} != {}", g.degree(n), edges.len()));
        }
    }
    out
}
