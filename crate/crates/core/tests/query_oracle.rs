use lcag_core::query::{execute_plan, naive_plan, parse_query, plan_query, run_query, QueryError};
use lcag_testkit::gen;
use lcag_testkit::oracle::{check_equivalent, run_oracle, templates};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn planner_matches_brute_force(seed in any::<u64>()) {
        let mut rng = gen::rng(seed);
        let g = gen::query_graph(&mut rng, 25, 60);
        for text in templates(&mut rng) {
            let q = parse_query(&text).unwrap();
            let expected = run_oracle(&q, &g).unwrap();
            let planned = execute_plan(&plan_query(&q, &g), &g).unwrap();
            let naive = execute_plan(&naive_plan(&q), &g).unwrap();
            if let Err(e) = check_equivalent(&q, &planned, &expected) {
                return Err(TestCaseError::fail(format!("planned: {text}\n{e}")));
            }
            if let Err(e) = check_equivalent(&q, &naive, &expected) {
                return Err(TestCaseError::fail(format!("naive: {text}\n{e}")));
            }
        }
    }

    /// Adding a conjunct to WHERE never adds rows.
    #[test]
    fn filters_are_monotone(seed in any::<u64>(), k in 0i64..5, x in 0u8..16) {
        let g = gen::query_graph(&mut gen::rng(seed), 20, 50);
        let base = "MATCH (a)-[e]->(b) WHERE a.k >= 1 RETURN a, e, b";
        let narrowed = format!("MATCH (a)-[e]->(b) WHERE a.k >= 1 AND (b.k = {k} OR e.w < {}) RETURN a, e, b", x as f64 / 4.0);
        let wide = run_query(base, &g).unwrap().sorted_rows();
        let narrow = run_query(&narrowed, &g).unwrap().sorted_rows();
        prop_assert!(narrow.len() <= wide.len());
        prop_assert!(narrow.iter().all(|r| wide.contains(r)));
    }

    #[test]
    fn queries_never_mutate(seed in any::<u64>()) {
        let mut rng = gen::rng(seed);
        let g = gen::query_graph(&mut rng, 15, 30);
        let before = g.to_dump();
        for text in templates(&mut rng) {
            let _ = run_query(&text, &g);
        }
        prop_assert_eq!(g.to_dump(), before);
    }
}

#[test]
fn seed_is_the_rarest_label() {
    let mut g = lcag_core::graph::Graph::new();
    for i in 0..50 {
        let l = if i % 10 == 0 { "Rare" } else { "Common" };
        g.create_node([l], Default::default()).unwrap();
    }
    let q = parse_query("MATCH (a:Common)-[]->(b:Rare) RETURN a").unwrap();
    let plan = plan_query(&q, &g);
    assert_eq!(plan.seed_label(), Some("Rare"));
    assert!(plan.to_string().contains("Rare"), "{plan}");
}

#[test]
fn errors_carry_positions() {
    let g = lcag_core::graph::Graph::new();
    match run_query("MATCH (a:A)\nRETURN a.", &g) {
        Err(QueryError::Syntax { line, col, .. }) => assert_eq!((line, col), (2, 10)),
        other => panic!("{other:?}"),
    }
    assert!(matches!(run_query("MATCH (a) RETURN b", &g), Err(QueryError::Semantic(_))));
}

#[test]
fn templates_are_not_vacuous() {
    let mut nonempty = vec![0usize; lcag_testkit::oracle::TEMPLATE_COUNT];
    for seed in 0..30 {
        let mut rng = gen::rng(seed);
        let g = gen::query_graph(&mut rng, 25, 60);
        for (i, text) in templates(&mut rng).iter().enumerate() {
            if !run_query(text, &g).unwrap().rows.is_empty() {
                nonempty[i] += 1;
            }
        }
    }
    assert!(nonempty.iter().all(|&n| n >= 5), "{nonempty:?}");
}
