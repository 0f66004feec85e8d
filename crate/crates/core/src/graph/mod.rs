//! In-memory labeled property graph.
//!
//! Nodes and edges live in dense slot vectors indexed by their id. Ids are
//! handed out monotonically and never reused, so a deleted slot simply
//! stays empty. Every node slot owns its outgoing and incoming adjacency
//! lists; each adjacency entry carries the edge id, the opposite endpoint
//! and the interned relationship type, so `neighbors` touches only the
//! node's own list and runs in time proportional to its degree.

mod snapshot;
mod triples;
mod value;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use snapshot::{read_snapshot, write_snapshot, SnapshotError, SNAPSHOT_HEADER};
pub use triples::{from_triples, parse_ntriples, to_triples, write_ntriples, Triple, TripleError, TripleObject};
pub use value::{props, PropertyMap, PropertyValue, Quantity, Uncertainty, ValueKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

/// Either kind of graph entity. Nodes order before edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EntityId {
    Node(NodeId),
    Edge(EdgeId),
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntityId::Node(n) => n.fmt(f),
            EntityId::Edge(e) => e.fmt(f),
        }
    }
}

impl From<NodeId> for EntityId {
    fn from(id: NodeId) -> Self {
        EntityId::Node(id)
    }
}

impl From<EdgeId> for EntityId {
    fn from(id: EdgeId) -> Self {
        EntityId::Edge(id)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("invalid property value: {0}")]
    InvalidValue(String),
    #[error("property keys must be non-empty")]
    EmptyKey,
    #[error("labels must be non-empty")]
    EmptyLabel,
    #[error("relationship type must be non-empty")]
    EmptyRelType,
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("unknown edge {0}")]
    UnknownEdge(EdgeId),
    #[error("node {node} still has {edges} incident edge(s); delete with detach")]
    HasIncidentEdges { node: NodeId, edges: usize },
    #[error("{0} is already in use")]
    IdInUse(EntityId),
    #[error("labels only apply to nodes, {0} is an edge")]
    NotANode(EdgeId),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    id: NodeId,
    labels: BTreeSet<String>,
    props: PropertyMap,
}

impl Node {
    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn labels(&self) -> &BTreeSet<String> {
        &self.labels
    }

    pub fn has_label(&self, label: &str) -> bool {
        self.labels.contains(label)
    }

    pub fn props(&self) -> &PropertyMap {
        &self.props
    }

    pub fn prop(&self, key: &str) -> Option<&PropertyValue> {
        self.props.get(key)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    id: EdgeId,
    rel_type: Arc<str>,
    src: NodeId,
    dst: NodeId,
    props: PropertyMap,
}

impl Edge {
    pub fn id(&self) -> EdgeId {
        self.id
    }

    pub fn rel_type(&self) -> &str {
        &self.rel_type
    }

    pub fn src(&self) -> NodeId {
        self.src
    }

    pub fn dst(&self) -> NodeId {
        self.dst
    }

    pub fn props(&self) -> &PropertyMap {
        &self.props
    }

    pub fn prop(&self, key: &str) -> Option<&PropertyValue> {
        self.props.get(key)
    }
}

/// Read-only view returned by [`Graph::get`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EntityRef<'a> {
    Node(&'a Node),
    Edge(&'a Edge),
}

impl<'a> EntityRef<'a> {
    pub fn props(&self) -> &'a PropertyMap {
        match self {
            EntityRef::Node(n) => &n.props,
            EntityRef::Edge(e) => &e.props,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Out,
    In,
    Both,
}

/// A single property or label change applied by [`Graph::update`].
#[derive(Debug, Clone, PartialEq)]
pub enum Change {
    SetProperty(String, PropertyValue),
    RemoveProperty(String),
    AddLabel(String),
    RemoveLabel(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChangeOutcome {
    Applied,
    /// Removal of a key or label that was not there; nothing changed.
    NotPresent,
    /// The value or label was already exactly as requested.
    Unchanged,
}

#[derive(Debug, Clone, Copy)]
struct AdjEntry {
    edge: EdgeId,
    other: NodeId,
    rel: u32,
    outgoing: bool,
}

#[derive(Debug, Clone)]
struct NodeSlot {
    node: Node,
    // both directions in one buffer so a lookup touches a single allocation;
    // a self-loop has one entry per direction
    adj: Vec<AdjEntry>,
}

#[derive(Debug, Clone, Default)]
struct RelTypes {
    names: Vec<Arc<str>>,
    lookup: HashMap<Arc<str>, u32>,
}

impl RelTypes {
    fn intern(&mut self, name: &str) -> (u32, Arc<str>) {
        if let Some(&id) = self.lookup.get(name) {
            return (id, self.names[id as usize].clone());
        }
        let id = self.names.len() as u32;
        let arc: Arc<str> = Arc::from(name);
        self.names.push(arc.clone());
        self.lookup.insert(arc.clone(), id);
        (id, arc)
    }

    fn get(&self, name: &str) -> Option<u32> {
        self.lookup.get(name).copied()
    }
}

/// The graph store. Single writer (`&mut self`), any number of readers.
#[derive(Debug, Clone, Default)]
pub struct Graph {
    nodes: Vec<Option<NodeSlot>>,
    edges: Vec<Option<Edge>>,
    label_index: HashMap<String, BTreeSet<NodeId>>,
    rel_types: RelTypes,
    live_nodes: usize,
    live_edges: usize,
}

fn check_props(props: &PropertyMap) -> Result<(), GraphError> {
    for (k, v) in props {
        if k.is_empty() {
            return Err(GraphError::EmptyKey);
        }
        v.validate()?;
    }
    Ok(())
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node_count(&self) -> usize {
        self.live_nodes
    }

    pub fn edge_count(&self) -> usize {
        self.live_edges
    }

    /// Id the next created node will receive.
    pub fn next_node_id(&self) -> NodeId {
        NodeId(self.nodes.len() as u64)
    }

    pub fn next_edge_id(&self) -> EdgeId {
        EdgeId(self.edges.len() as u64)
    }

    pub fn create_node<L, S>(&mut self, labels: L, props: PropertyMap) -> Result<NodeId, GraphError>
    where
        L: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let id = self.next_node_id();
        self.insert_node(id, labels, props)?;
        Ok(id)
    }

    /// Inserts a node under an explicit id. Used when restoring dumps and
    /// when rebuilding translated graphs; later ids continue after the
    /// largest one seen.
    pub fn insert_node<L, S>(&mut self, id: NodeId, labels: L, props: PropertyMap) -> Result<(), GraphError>
    where
        L: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: BTreeSet<String> = labels.into_iter().map(Into::into).collect();
        if labels.iter().any(String::is_empty) {
            return Err(GraphError::EmptyLabel);
        }
        check_props(&props)?;
        let idx = id.0 as usize;
        if self.nodes.get(idx).is_some_and(Option::is_some) {
            return Err(GraphError::IdInUse(id.into()));
        }
        if idx >= self.nodes.len() {
            self.nodes.resize_with(idx + 1, || None);
        }
        for label in &labels {
            self.label_index.entry(label.clone()).or_default().insert(id);
        }
        self.nodes[idx] = Some(NodeSlot { node: Node { id, labels, props }, adj: Vec::new() });
        self.live_nodes += 1;
        Ok(())
    }

    pub fn create_edge(
        &mut self,
        rel_type: &str,
        src: NodeId,
        dst: NodeId,
        props: PropertyMap,
    ) -> Result<EdgeId, GraphError> {
        let id = self.next_edge_id();
        self.insert_edge(id, rel_type, src, dst, props)?;
        Ok(id)
    }

    pub fn insert_edge(
        &mut self,
        id: EdgeId,
        rel_type: &str,
        src: NodeId,
        dst: NodeId,
        props: PropertyMap,
    ) -> Result<(), GraphError> {
        if rel_type.is_empty() {
            return Err(GraphError::EmptyRelType);
        }
        check_props(&props)?;
        for n in [src, dst] {
            if self.slot(n).is_none() {
                return Err(GraphError::UnknownNode(n));
            }
        }
        let idx = id.0 as usize;
        if self.edges.get(idx).is_some_and(Option::is_some) {
            return Err(GraphError::IdInUse(id.into()));
        }
        if idx >= self.edges.len() {
            self.edges.resize_with(idx + 1, || None);
        }
        let (rel, rel_name) = self.rel_types.intern(rel_type);
        self.slot_mut(src).expect("checked").adj.push(AdjEntry { edge: id, other: dst, rel, outgoing: true });
        self.slot_mut(dst).expect("checked").adj.push(AdjEntry { edge: id, other: src, rel, outgoing: false });
        self.edges[idx] = Some(Edge { id, rel_type: rel_name, src, dst, props });
        self.live_edges += 1;
        Ok(())
    }

    fn slot(&self, id: NodeId) -> Option<&NodeSlot> {
        self.nodes.get(id.0 as usize).and_then(Option::as_ref)
    }

    fn slot_mut(&mut self, id: NodeId) -> Option<&mut NodeSlot> {
        self.nodes.get_mut(id.0 as usize).and_then(Option::as_mut)
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.slot(id).map(|s| &s.node)
    }

    pub fn edge(&self, id: EdgeId) -> Option<&Edge> {
        self.edges.get(id.0 as usize).and_then(Option::as_ref)
    }

    pub fn contains(&self, target: EntityId) -> bool {
        self.get(target).is_some()
    }

    pub fn get(&self, target: EntityId) -> Option<EntityRef<'_>> {
        match target {
            EntityId::Node(n) => self.node(n).map(EntityRef::Node),
            EntityId::Edge(e) => self.edge(e).map(EntityRef::Edge),
        }
    }

    /// Live nodes in id order.
    pub fn nodes(&self) -> impl Iterator<Item = &Node> + '_ {
        self.nodes.iter().filter_map(|s| s.as_ref().map(|s| &s.node))
    }

    /// Live edges in id order.
    pub fn edges(&self) -> impl Iterator<Item = &Edge> + '_ {
        self.edges.iter().filter_map(Option::as_ref)
    }

    /// Ids of the nodes carrying `label`, ascending. Unknown labels yield
    /// nothing.
    pub fn nodes_with_label<'a>(&'a self, label: &str) -> impl Iterator<Item = NodeId> + 'a {
        self.label_index.get(label).into_iter().flat_map(|set| set.iter().copied())
    }

    pub fn label_cardinality(&self, label: &str) -> usize {
        self.label_index.get(label).map_or(0, BTreeSet::len)
    }

    /// Every label in use with its node count, sorted by label.
    pub fn label_counts(&self) -> BTreeMap<&str, usize> {
        self.label_index.iter().filter(|(_, s)| !s.is_empty()).map(|(l, s)| (l.as_str(), s.len())).collect()
    }

    pub fn rel_type_counts(&self) -> BTreeMap<&str, usize> {
        let mut counts = BTreeMap::new();
        for e in self.edges() {
            *counts.entry(e.rel_type()).or_insert(0) += 1;
        }
        counts
    }

    /// Incident edges of `node` matching `direction` and, if given, the
    /// relationship type, as `(edge, opposite node)` pairs. With
    /// [`Direction::Both`] a self-loop is reported once.
    pub fn neighbors(
        &self,
        node: NodeId,
        direction: Direction,
        rel_type: Option<&str>,
    ) -> Result<Vec<(EdgeId, NodeId)>, GraphError> {
        let mut out = Vec::with_capacity(self.degree(node).unwrap_or(0));
        self.for_each_neighbor(node, direction, rel_type, |e, n| out.push((e, n)))?;
        Ok(out)
    }

    /// Non-allocating form of [`Graph::neighbors`].
    pub fn for_each_neighbor<F>(
        &self,
        node: NodeId,
        direction: Direction,
        rel_type: Option<&str>,
        mut f: F,
    ) -> Result<(), GraphError>
    where
        F: FnMut(EdgeId, NodeId),
    {
        let slot = self.slot(node).ok_or(GraphError::UnknownNode(node))?;
        let rel = match rel_type {
            Some(name) => match self.rel_types.get(name) {
                Some(r) => Some(r),
                None => return Ok(()),
            },
            None => None,
        };
        let (want_out, want_in) = match direction {
            Direction::Out => (true, false),
            Direction::In => (false, true),
            Direction::Both => (true, true),
        };
        for a in &slot.adj {
            if rel.is_some_and(|r| r != a.rel) || !(if a.outgoing { want_out } else { want_in }) {
                continue;
            }
            // Both reports a self-loop once, from its outgoing entry
            if direction == Direction::Both && !a.outgoing && a.other == node {
                continue;
            }
            f(a.edge, a.other);
        }
        Ok(())
    }

    pub fn degree(&self, node: NodeId) -> Option<usize> {
        self.slot(node).map(|s| s.adj.len())
    }

    pub fn update(&mut self, target: EntityId, change: Change) -> Result<ChangeOutcome, GraphError> {
        match target {
            EntityId::Node(id) => {
                let slot = self.nodes.get_mut(id.0 as usize).and_then(Option::as_mut);
                let node = &mut slot.ok_or(GraphError::UnknownNode(id))?.node;
                match change {
                    Change::SetProperty(k, v) => set_prop(&mut node.props, k, v),
                    Change::RemoveProperty(k) => Ok(remove_prop(&mut node.props, &k)),
                    Change::AddLabel(label) => {
                        if label.is_empty() {
                            return Err(GraphError::EmptyLabel);
                        }
                        if !node.labels.insert(label.clone()) {
                            return Ok(ChangeOutcome::Unchanged);
                        }
                        self.label_index.entry(label).or_default().insert(id);
                        Ok(ChangeOutcome::Applied)
                    }
                    Change::RemoveLabel(label) => {
                        if !node.labels.remove(&label) {
                            return Ok(ChangeOutcome::NotPresent);
                        }
                        self.unindex_label(&label, id);
                        Ok(ChangeOutcome::Applied)
                    }
                }
            }
            EntityId::Edge(id) => {
                let edge =
                    self.edges.get_mut(id.0 as usize).and_then(Option::as_mut).ok_or(GraphError::UnknownEdge(id))?;
                match change {
                    Change::SetProperty(k, v) => set_prop(&mut edge.props, k, v),
                    Change::RemoveProperty(k) => Ok(remove_prop(&mut edge.props, &k)),
                    Change::AddLabel(_) | Change::RemoveLabel(_) => Err(GraphError::NotANode(id)),
                }
            }
        }
    }

    fn unindex_label(&mut self, label: &str, id: NodeId) {
        if let Some(set) = self.label_index.get_mut(label) {
            set.remove(&id);
            if set.is_empty() {
                self.label_index.remove(label);
            }
        }
    }

    /// Deletes a node or edge and returns how many entities were removed.
    /// A node with incident edges is only removed when `detach` is set, in
    /// which case its edges go with it.
    pub fn delete(&mut self, target: EntityId, detach: bool) -> Result<usize, GraphError> {
        match target {
            EntityId::Edge(id) => {
                self.remove_edge(id)?;
                Ok(1)
            }
            EntityId::Node(id) => {
                let slot = self.slot(id).ok_or(GraphError::UnknownNode(id))?;
                let mut incident: Vec<EdgeId> = slot.adj.iter().map(|a| a.edge).collect();
                incident.sort_unstable();
                incident.dedup();
                if !incident.is_empty() && !detach {
                    return Err(GraphError::HasIncidentEdges { node: id, edges: incident.len() });
                }
                for e in &incident {
                    self.remove_edge(*e)?;
                }
                let slot = self.nodes[id.0 as usize].take().expect("checked above");
                for label in &slot.node.labels {
                    self.unindex_label(label, id);
                }
                self.live_nodes -= 1;
                Ok(1 + incident.len())
            }
        }
    }

    fn remove_edge(&mut self, id: EdgeId) -> Result<(), GraphError> {
        let edge = self.edges.get_mut(id.0 as usize).and_then(Option::take).ok_or(GraphError::UnknownEdge(id))?;
        for end in [edge.src, edge.dst] {
            if let Some(s) = self.slot_mut(end) {
                s.adj.retain(|a| a.edge != id);
            }
        }
        self.live_edges -= 1;
        Ok(())
    }
}

fn set_prop(map: &mut PropertyMap, key: String, value: PropertyValue) -> Result<ChangeOutcome, GraphError> {
    if key.is_empty() {
        return Err(GraphError::EmptyKey);
    }
    value.validate()?;
    if map.get(&key) == Some(&value) {
        return Ok(ChangeOutcome::Unchanged);
    }
    map.insert(key, value);
    Ok(ChangeOutcome::Applied)
}

fn remove_prop(map: &mut PropertyMap, key: &str) -> ChangeOutcome {
    match map.remove(key) {
        Some(_) => ChangeOutcome::Applied,
        None => ChangeOutcome::NotPresent,
    }
}

/// Two graphs are equal when they hold the same live nodes and edges under
/// the same ids. Id counters and interning order are not compared.
impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.live_nodes == other.live_nodes
            && self.live_edges == other.live_edges
            && self.nodes().eq(other.nodes())
            && self.edges().eq(other.edges())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(x: f64, unit: &str) -> PropertyValue {
        PropertyValue::Quantity(Quantity::new(x, unit))
    }

    #[test]
    fn minimal_node() {
        let mut g = Graph::new();
        let n = g.create_node(Vec::<String>::new(), PropertyMap::new()).unwrap();
        assert_eq!(g.node_count(), 1);
        assert!(g.node(n).unwrap().labels().is_empty());
    }

    #[test]
    fn labelled_nodes_are_indexed() {
        let mut g = Graph::new();
        let a = g
            .create_node(["Activity"], props([("name", "fermentation".into()), ("stage", "production".into())]))
            .unwrap();
        let f = g.create_node(["Flow"], props([("name", "glucose".into()), ("kind", "intermediate".into())])).unwrap();
        assert_eq!(g.nodes_with_label("Activity").collect::<Vec<_>>(), vec![a]);
        assert_eq!(g.nodes_with_label("Flow").collect::<Vec<_>>(), vec![f]);
        assert_eq!(g.nodes_with_label("Nope").count(), 0);
    }

    #[test]
    fn nan_rejected() {
        let mut g = Graph::new();
        let err = g.create_node(["Flow"], props([("x", PropertyValue::Real(f64::NAN))])).unwrap_err();
        assert!(matches!(err, GraphError::InvalidValue(_)));
        assert_eq!(g.node_count(), 0);
        assert!(matches!(g.create_node(["Flow"], props([("", PropertyValue::Int(1))])), Err(GraphError::EmptyKey)));
    }

    #[test]
    fn self_loop_in_both_lists() {
        let mut g = Graph::new();
        let n = g.create_node(["Activity"], PropertyMap::new()).unwrap();
        let e = g.create_edge("NEXT", n, n, PropertyMap::new()).unwrap();
        assert_eq!(g.neighbors(n, Direction::Out, None).unwrap(), vec![(e, n)]);
        assert_eq!(g.neighbors(n, Direction::In, None).unwrap(), vec![(e, n)]);
        assert_eq!(g.neighbors(n, Direction::Both, None).unwrap(), vec![(e, n)]);
    }

    #[test]
    fn exchange_edge_and_missing_endpoint() {
        let mut g = Graph::new();
        let a = g.create_node(["Activity"], PropertyMap::new()).unwrap();
        let f = g.create_node(["Flow"], PropertyMap::new()).unwrap();
        let e = g.create_edge("HAS_OUTPUT", a, f, props([("amount", q(1.0, "kg"))])).unwrap();
        assert_eq!(g.neighbors(a, Direction::Out, Some("HAS_OUTPUT")).unwrap(), vec![(e, f)]);
        assert_eq!(g.neighbors(a, Direction::Out, Some("HAS_INPUT")).unwrap(), vec![]);
        assert_eq!(g.neighbors(f, Direction::In, None).unwrap(), vec![(e, a)]);
        assert_eq!(
            g.create_edge("HAS_INPUT", a, NodeId(99), PropertyMap::new()),
            Err(GraphError::UnknownNode(NodeId(99)))
        );
        assert_eq!(g.create_edge("", a, f, PropertyMap::new()), Err(GraphError::EmptyRelType));
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn isolated_node_has_no_neighbors() {
        let mut g = Graph::new();
        let n = g.create_node(["Flow"], PropertyMap::new()).unwrap();
        for d in [Direction::Out, Direction::In, Direction::Both] {
            assert!(g.neighbors(n, d, None).unwrap().is_empty());
        }
        assert_eq!(g.neighbors(NodeId(7), Direction::Out, None), Err(GraphError::UnknownNode(NodeId(7))));
    }

    #[test]
    fn update_read_your_write() {
        let mut g = Graph::new();
        let n = g.create_node(["Activity"], PropertyMap::new()).unwrap();
        let t = EntityId::Node(n);
        assert_eq!(
            g.update(t, Change::SetProperty("yield".into(), PropertyValue::Real(0.42))),
            Ok(ChangeOutcome::Applied)
        );
        assert_eq!(g.node(n).unwrap().prop("yield"), Some(&PropertyValue::Real(0.42)));
        assert_eq!(g.update(t, Change::AddLabel("Validated".into())), Ok(ChangeOutcome::Applied));
        assert_eq!(g.nodes_with_label("Validated").collect::<Vec<_>>(), vec![n]);
        assert_eq!(g.update(t, Change::RemoveProperty("missing".into())), Ok(ChangeOutcome::NotPresent));
        assert_eq!(g.update(t, Change::RemoveLabel("Ghost".into())), Ok(ChangeOutcome::NotPresent));
        assert_eq!(g.update(t, Change::RemoveLabel("Validated".into())), Ok(ChangeOutcome::Applied));
        assert_eq!(g.nodes_with_label("Validated").count(), 0);
        assert!(g.update(t, Change::SetProperty("bad".into(), PropertyValue::Real(f64::INFINITY))).is_err());
        assert_eq!(
            g.update(EntityId::Node(NodeId(50)), Change::RemoveProperty("x".into())),
            Err(GraphError::UnknownNode(NodeId(50)))
        );
    }

    #[test]
    fn labels_do_not_apply_to_edges() {
        let mut g = Graph::new();
        let n = g.create_node(["A"], PropertyMap::new()).unwrap();
        let e = g.create_edge("R", n, n, PropertyMap::new()).unwrap();
        assert_eq!(g.update(e.into(), Change::AddLabel("X".into())), Err(GraphError::NotANode(e)));
        assert_eq!(g.update(e.into(), Change::SetProperty("w".into(), 1i64.into())), Ok(ChangeOutcome::Applied));
    }

    #[test]
    fn get_entity_views() {
        let mut g = Graph::new();
        let a = g.create_node(["Activity"], props([("name", "mix".into())])).unwrap();
        let b = g.create_node(["Activity"], PropertyMap::new()).unwrap();
        let e = g.create_edge("NEXT", a, b, PropertyMap::new()).unwrap();
        match g.get(a.into()) {
            Some(EntityRef::Node(n)) => {
                assert!(n.has_label("Activity"));
                assert_eq!(n.prop("name"), Some(&"mix".into()));
            }
            other => panic!("unexpected {other:?}"),
        }
        match g.get(e.into()) {
            Some(EntityRef::Edge(edge)) => {
                assert_eq!((edge.rel_type(), edge.src(), edge.dst()), ("NEXT", a, b));
            }
            other => panic!("unexpected {other:?}"),
        }
        g.delete(a.into(), true).unwrap();
        assert!(g.get(a.into()).is_none());
        assert!(g.get(e.into()).is_none());
    }

    #[test]
    fn delete_counts_and_integrity() {
        let mut g = Graph::new();
        let iso = g.create_node(["X"], PropertyMap::new()).unwrap();
        assert_eq!(g.delete(iso.into(), false), Ok(1));

        let hub = g.create_node(["Hub"], PropertyMap::new()).unwrap();
        let others: Vec<_> = (0..3).map(|_| g.create_node(["Leaf"], PropertyMap::new()).unwrap()).collect();
        g.create_edge("R", hub, others[0], PropertyMap::new()).unwrap();
        g.create_edge("R", others[1], hub, PropertyMap::new()).unwrap();
        g.create_edge("R", hub, others[2], PropertyMap::new()).unwrap();
        let before = g.clone();
        assert_eq!(g.delete(others[0].into(), false), Err(GraphError::HasIncidentEdges { node: others[0], edges: 1 }));
        assert_eq!(g, before);
        assert_eq!(g.delete(hub.into(), true), Ok(4));
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.nodes_with_label("Hub").count(), 0);
        for o in others {
            assert!(g.neighbors(o, Direction::Both, None).unwrap().is_empty());
        }
    }

    #[test]
    fn ids_are_never_reused() {
        let mut g = Graph::new();
        let a = g.create_node(["A"], PropertyMap::new()).unwrap();
        g.delete(a.into(), false).unwrap();
        let b = g.create_node(["A"], PropertyMap::new()).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn self_loop_deletion_counts_once() {
        let mut g = Graph::new();
        let n = g.create_node(["A"], PropertyMap::new()).unwrap();
        g.create_edge("R", n, n, PropertyMap::new()).unwrap();
        assert_eq!(g.delete(n.into(), true), Ok(2));
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn graph_is_send_and_sync() {
        fn assert_send_sync<T: Send + Sync>() {}
        assert_send_sync::<Graph>();
    }
}
