//! Re-encodes a canonical inventory graph in the vocabulary of a source
//! ontology, and compares graphs up to isomorphism.

use std::collections::{BTreeMap, BTreeSet};

use lcag_core::graph::{Graph, NodeId, PropertyMap};

/// How one source ontology spells the canonical terms: relation renames
/// (with a flag for edges that point the other way), label renames and
/// property key renames.
pub struct Encoding {
    pub ontology: &'static str,
    pub relations: &'static [(&'static str, &'static str, bool)],
    pub labels: &'static [(&'static str, &'static str)],
    pub keys: &'static [(&'static str, &'static str)],
}

pub const ZHANG: Encoding = Encoding {
    ontology: "Zhang2015",
    relations: &[("HAS_INPUT", "hasInflow", false), ("HAS_OUTPUT", "hasOutflow", false)],
    labels: &[],
    keys: &[("boundary", "hasBoundary")],
};

pub const WANG: Encoding = Encoding {
    ontology: "Wang2022",
    relations: &[("HAS_INPUT", "hasInputFlow", false), ("HAS_OUTPUT", "hasOutputFlow", false)],
    labels: &[("Activity", "Process")],
    keys: &[],
};

/// Exchanges point from the flow to the activity.
pub const LCIO: Encoding = Encoding {
    ontology: "LciO",
    relations: &[("HAS_INPUT", "Input_Of", true), ("HAS_OUTPUT", "Output_Of", true)],
    labels: &[],
    keys: &[],
};

fn rename(map: &[(&str, &str)], term: &str) -> String {
    map.iter().find(|(c, _)| *c == term).map_or(term, |(_, s)| s).to_string()
}

fn rename_keys(map: &[(&str, &str)], props: &PropertyMap) -> PropertyMap {
    props.iter().map(|(k, v)| (rename(map, k), v.clone())).collect()
}

pub fn encode(g: &Graph, enc: &Encoding) -> Graph {
    let mut out = Graph::new();
    for n in g.nodes() {
        let labels: Vec<String> = n.labels().iter().map(|l| rename(enc.labels, l)).collect();
        out.insert_node(n.id(), labels, rename_keys(enc.keys, n.props())).unwrap();
    }
    for e in g.edges() {
        let (rel, flip) = enc
            .relations
            .iter()
            .find(|(c, _, _)| *c == e.rel_type())
            .map_or((e.rel_type(), false), |(_, s, f)| (*s, *f));
        let (src, dst) = if flip { (e.dst(), e.src()) } else { (e.src(), e.dst()) };
        out.insert_edge(e.id(), rel, src, dst, rename_keys(enc.keys, e.props())).unwrap();
    }
    out
}

/// An id-free description of `g`. Nodes are named by their labels and
/// properties; when those names are unique, two graphs have equal forms
/// exactly when they are isomorphic. Errors if some name repeats.
pub fn canonical_form(g: &Graph) -> Result<Vec<String>, String> {
    let mut names: BTreeMap<NodeId, String> = BTreeMap::new();
    let mut seen = BTreeSet::new();
    for n in g.nodes() {
        let props: Vec<String> = n.props().iter().map(|(k, v)| format!("{k}={}", v.to_json())).collect();
        let name = format!("({}) {{{}}}", n.labels().iter().cloned().collect::<Vec<_>>().join(":"), props.join(", "));
        if !seen.insert(name.clone()) {
            return Err(format!("two nodes look alike: {name}"));
        }
        names.insert(n.id(), name);
    }
    let mut form: Vec<String> = names.values().cloned().collect();
    let mut edges: Vec<String> = g
        .edges()
        .map(|e| {
            let props: Vec<String> = e.props().iter().map(|(k, v)| format!("{k}={}", v.to_json())).collect();
            format!("{} -[{} {{{}}}]-> {}", names[&e.src()], e.rel_type(), props.join(", "), names[&e.dst()])
        })
        .collect();
    edges.sort();
    form.extend(edges);
    Ok(form)
}
