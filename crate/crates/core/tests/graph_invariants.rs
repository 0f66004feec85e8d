use lcag_core::graph::{
    from_triples, parse_ntriples, read_snapshot, to_triples, write_ntriples, write_snapshot, Graph,
};
use lcag_testkit::gen;
use proptest::prelude::*;

fn snapshot(g: &Graph) -> Vec<u8> {
    let mut out = Vec::new();
    write_snapshot(g, &mut out).unwrap();
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn indexes_match_scans_under_mutation(seed in any::<u64>(), ops in 1usize..400) {
        let mut rng = gen::rng(seed);
        let mut g = gen::query_graph(&mut rng, 10, 20);
        let mut log = Vec::new();
        for i in 0..ops {
            log.push(gen::random_mutation(&mut g, &mut rng));
            if i % 25 == 0 || i + 1 == ops {
                let bad = gen::index_discrepancies(&g);
                prop_assert!(bad.is_empty(), "after {:?}: {:?}", log, bad);
            }
        }
    }

    #[test]
    fn triples_round_trip(seed in any::<u64>()) {
        let g = gen::rich_graph(&mut gen::rng(seed), 40);
        let back = from_triples(&to_triples(&g)).unwrap();
        prop_assert_eq!(&back, &g);
        // and through N-Triples text
        let text = write_ntriples(&to_triples(&g));
        let parsed = parse_ntriples(&text).unwrap();
        prop_assert_eq!(&from_triples(&parsed).unwrap(), &g);
    }

    #[test]
    fn snapshot_round_trip_is_deterministic(seed in any::<u64>()) {
        let g = gen::rich_graph(&mut gen::rng(seed), 40);
        let bytes = snapshot(&g);
        prop_assert_eq!(&bytes, &snapshot(&g));
        let back = read_snapshot(&bytes[..]).unwrap();
        prop_assert_eq!(&back, &g);
        prop_assert_eq!(snapshot(&back), bytes);
    }

    #[test]
    fn snapshot_keeps_id_counters_ahead(seed in any::<u64>()) {
        let mut g = gen::rich_graph(&mut gen::rng(seed), 20);
        let mut back = read_snapshot(&snapshot(&g)[..]).unwrap();
        let a = g.create_node(["X"], Default::default()).unwrap();
        let b = back.create_node(["X"], Default::default()).unwrap();
        prop_assert!(g.node(b).is_none() || a == b);
    }
}

#[test]
fn empty_graph_round_trips() {
    let g = Graph::new();
    assert_eq!(from_triples(&to_triples(&g)).unwrap(), g);
    assert_eq!(read_snapshot(&snapshot(&g)[..]).unwrap(), g);
}
