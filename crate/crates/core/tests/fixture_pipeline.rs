use std::collections::BTreeMap;

use lcag_core::graph::{Graph, Quantity};
use lcag_core::ingest::ingest_bundle;
use lcag_core::ontology::{builtin_schema, validate_graph};
use lcag_core::quality::{fair_report, score_quality};
use lcag_core::query::{run_query, Value};
use lcag_testkit::{fixture, gen};

#[test]
fn fixture_conforms_and_is_fair() {
    let g = fixture::graph();
    let schema = builtin_schema();
    assert_eq!(validate_graph(&g, &schema), vec![]);
    let fair = fair_report(&g, &schema);
    assert!(fair.all_passed(), "{fair}");
    let q = score_quality(&g, &schema);
    for (name, r) in q.dimensions() {
        if name != "completeness" && name != "accuracy_proxy" {
            assert_eq!(r.ratio, 1.0, "{name}: {:?}", r.offenders);
        }
    }
    // free-form metadata keys are outside the schema vocabulary
    assert_eq!(q.accuracy_proxy.offenders, vec!["property feedstock"]);
    assert_eq!(q.accuracy_proxy.numerator + 1, q.accuracy_proxy.denominator);
    // W2 never leaves the production stage
    assert_eq!((q.completeness.numerator, q.completeness.denominator), (1, 2));
}

#[test]
fn fixture_shape() {
    let g = fixture::graph();
    let counts = g.label_counts();
    assert_eq!(counts["Workflow"], 2);
    assert_eq!(counts["Activity"], 10);
    assert_eq!(counts["Reference"], 2);
    assert_eq!(counts["Agent"], 3);
    assert_eq!(counts["Location"], 2);
    assert_eq!(counts["FunctionalUnit"], 2);
    // "fermentation broth" and "succinic acid" are shared between workflows
    let shared = run_query(
        "MATCH (w1:Workflow {id: 'W1'})-[:HAS_STEP]->()-[]->(f:Flow)<-[]-()<-[:HAS_STEP]-(w2:Workflow {id: 'W2'}) RETURN DISTINCT f.name ORDER BY f.name",
        &g,
    )
    .unwrap();
    assert_eq!(shared.rows, vec![vec![Value::from("fermentation broth")], vec![Value::from("succinic acid")]]);
}

#[test]
fn ingesting_twice_changes_nothing() {
    let once = fixture::graph();
    let mut twice = once.clone();
    let s = ingest_bundle(&mut twice, &fixture::bundle()).unwrap();
    assert_eq!((s.nodes_created, s.edges_created, s.props_set), (0, 0, 0));
    assert_eq!(twice.to_dump(), once.to_dump());
}

#[test]
fn row_order_does_not_matter() {
    let reference = fixture::graph().to_dump();
    let bundle = fixture::bundle();
    for seed in 0..25 {
        let mut g = Graph::new();
        ingest_bundle(&mut g, &fixture::permuted(&bundle, &mut gen::rng(seed))).unwrap();
        assert_eq!(g.to_dump(), reference, "seed {seed}");
    }
}

#[test]
fn tables_ingested_separately_converge() {
    let reference = fixture::graph();
    let bundle = fixture::bundle();
    let mut g = Graph::new();
    for t in fixture::TABLES {
        let one: BTreeMap<String, String> = [(t.to_string(), bundle[t].clone())].into();
        ingest_bundle(&mut g, &one).unwrap();
    }
    assert_eq!(g.node_count(), reference.node_count());
    assert_eq!(g.edge_count(), reference.edge_count());
    assert_eq!(validate_graph(&g, &builtin_schema()), vec![]);
}

#[test]
fn yields_match_the_csv() {
    let expected = fixture::yields_from_csv();
    assert_eq!(expected, BTreeMap::from([("W1".to_string(), 0.87), ("W2".to_string(), 1.0)]));
    let t = run_query(fixture::YIELD_QUERY, &fixture::graph()).unwrap();
    assert_eq!(t.columns, vec!["workflow", "total"]);
    let got: BTreeMap<String, f64> = t
        .rows
        .iter()
        .map(|r| match (&r[0], &r[1]) {
            (Value::Text(w), Value::Quantity(Quantity { magnitude, unit, .. })) => {
                assert_eq!(unit, "kg");
                (w.clone(), *magnitude)
            }
            other => panic!("unexpected row {other:?}"),
        })
        .collect();
    assert_eq!(got, expected);
}
