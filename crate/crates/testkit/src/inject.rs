//! Plants one schema violation at a time into a conforming inventory graph.

use std::collections::BTreeSet;

use lcag_core::graph::{props, Change, EntityId, Graph, NodeId, PropertyMap, PropertyValue};
use lcag_core::ontology::ViolationKind;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

fn unused(g: &Graph, label: &str, used: &BTreeSet<EntityId>, rng: &mut StdRng) -> Option<NodeId> {
    let free: Vec<NodeId> = g.nodes_with_label(label).filter(|n| !used.contains(&(*n).into())).collect();
    free.choose(rng).copied()
}

fn any(g: &Graph, label: &str, rng: &mut StdRng) -> NodeId {
    let all: Vec<NodeId> = g.nodes_with_label(label).collect();
    *all.choose(rng).unwrap_or_else(|| panic!("graph has no {label} node"))
}

/// Introduces exactly one violation of `kind` and returns the entity it
/// should be reported on. Existing entities are only modified when they are
/// not in `used`, so any sequence of injections stays independent. The
/// graph must hold Workflow, Activity, Flow and Reference nodes.
pub fn inject(g: &mut Graph, kind: ViolationKind, rng: &mut StdRng, used: &mut BTreeSet<EntityId>) -> EntityId {
    let mutate = rng.gen_bool(0.5);
    let target: EntityId = match kind {
        ViolationKind::UnknownLabel => match unused(g, "Flow", used, rng).filter(|_| mutate) {
            Some(n) => {
                g.update(n.into(), Change::AddLabel("Gizmo".into())).unwrap();
                n.into()
            }
            None => g.create_node(["Gizmo"], props([("name", "thing".into())])).unwrap().into(),
        },
        ViolationKind::UnknownRelation => {
            let (a, b) = (any(g, "Activity", rng), any(g, "Flow", rng));
            g.create_edge("FEEDS_INTO", a, b, PropertyMap::new()).unwrap().into()
        }
        ViolationKind::DomainViolation => {
            let (a, r) = (any(g, "Activity", rng), any(g, "Reference", rng));
            g.create_edge("HAS_REFERENCE", a, r, PropertyMap::new()).unwrap().into()
        }
        ViolationKind::RangeViolation => {
            let (w, f) = (any(g, "Workflow", rng), any(g, "Flow", rng));
            g.create_edge("LOCATED_IN", w, f, PropertyMap::new()).unwrap().into()
        }
        ViolationKind::MissingRequiredProperty => match unused(g, "Flow", used, rng).filter(|_| mutate) {
            Some(n) => {
                g.update(n.into(), Change::RemoveProperty("name".into())).unwrap();
                n.into()
            }
            None => g.create_node(["Location"], PropertyMap::new()).unwrap().into(),
        },
        ViolationKind::BadEnumValue => match unused(g, "Activity", used, rng).filter(|_| mutate) {
            Some(n) => {
                g.update(n.into(), Change::SetProperty("stage".into(), "orbit".into())).unwrap();
                n.into()
            }
            None => {
                g.create_node(["Flow"], props([("name", "steam".into()), ("kind", "gaseous".into())])).unwrap().into()
            }
        },
        ViolationKind::BadValueKind => match unused(g, "Activity", used, rng).filter(|_| mutate) {
            Some(n) => {
                g.update(n.into(), Change::SetProperty("step_index".into(), "three".into())).unwrap();
                n.into()
            }
            None => g.create_node(["Location"], props([("code", PropertyValue::Int(5))])).unwrap().into(),
        },
    };
    used.insert(target);
    target
}
