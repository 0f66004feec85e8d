//! Acceptance checks, one line of output per criterion. Runs without the
//! libtest harness so each check reports even when an earlier one fails.

use std::collections::{BTreeMap, BTreeSet};
use std::hint::black_box;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use lcag_core::graph::{
    from_triples, read_snapshot, to_triples, write_snapshot, Direction, EntityId, Graph, NodeId, PropertyMap,
};
use lcag_core::harmonize::{builtin_mappings, translate_graph};
use lcag_core::ingest::ingest_bundle;
use lcag_core::ontology::{builtin_schema, validate_graph, ViolationKind};
use lcag_core::quality::score_quality;
use lcag_core::query::{execute_query, parse_query};
use lcag_testkit::inject::inject;
use lcag_testkit::oracle::{check_equivalent, run_oracle, templates, TEMPLATE_COUNT};
use lcag_testkit::vocab::{canonical_form, encode, LCIO, WANG, ZHANG};
use lcag_testkit::{fixture, gen};
use rand::seq::SliceRandom;
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn snapshot(g: &Graph) -> Vec<u8> {
    let mut out = Vec::new();
    write_snapshot(g, &mut out).unwrap();
    out
}

fn query_oracle() -> Outcome {
    let start = Instant::now();
    let mut cases = 0;
    for seed in 0..200 {
        let mut rng = gen::rng(seed);
        let g = gen::query_graph(&mut rng, 50, 120);
        for text in templates(&mut rng) {
            let q = parse_query(&text).map_err(|e| format!("{text}: {e}"))?;
            let expected = run_oracle(&q, &g).map_err(|e| format!("oracle, seed {seed}: {text}: {e}"))?;
            let got = execute_query(&q, &g).map_err(|e| format!("seed {seed}: {text}: {e}"))?;
            check_equivalent(&q, &got, &expected).map_err(|e| format!("seed {seed}: {text}\n{e}"))?;
            cases += 1;
        }
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(60), || format!("took {took:.1?}, limit 60s"))?;
    Ok(format!("{cases}/{cases} cases equal over {TEMPLATE_COUNT} templates in {took:.1?}"))
}

fn index_coherence() -> Outcome {
    let mut checks = 0;
    for seed in 0..5 {
        let mut rng = gen::rng(seed);
        let mut g = Graph::new();
        let mut log = Vec::new();
        for op in 1..=10_000 {
            log.push(gen::random_mutation(&mut g, &mut rng));
            if op % 100 == 0 {
                let bad = gen::index_discrepancies(&g);
                checks += 1;
                ensure(bad.is_empty(), || {
                    format!("seed {seed} after op {op} ({}): {}", log[log.len() - 1], bad.join("; "))
                })?;
            }
        }
    }
    Ok(format!("5 sequences of 10000 ops, {checks} checks, 0 discrepancies"))
}

fn corpus() -> Vec<Graph> {
    (0..100).map(|seed| gen::rich_graph(&mut gen::rng(1000 + seed), 100)).collect()
}

fn triple_round_trip() -> Outcome {
    let graphs = corpus();
    for (i, g) in graphs.iter().enumerate() {
        let back = from_triples(&to_triples(g)).map_err(|e| format!("graph {i}: {e}"))?;
        ensure(&back == g, || format!("graph {i} differs after round trip"))?;
    }
    let edges: usize = graphs.iter().map(Graph::edge_count).sum();
    Ok(format!("100/100 graphs equal ({edges} edges total)"))
}

fn snapshot_round_trip() -> Outcome {
    for (i, g) in corpus().iter().enumerate() {
        let bytes = snapshot(g);
        ensure(bytes == snapshot(g), || format!("graph {i}: two writes differ"))?;
        let back = read_snapshot(&bytes[..]).map_err(|e| format!("graph {i}: {e}"))?;
        ensure(&back == g, || format!("graph {i} differs after read"))?;
        ensure(snapshot(&back) == bytes, || format!("graph {i}: rewrite differs"))?;
    }
    Ok("100/100 graphs identical, writes byte-deterministic".into())
}

fn ingest_idempotency() -> Outcome {
    let bundle = fixture::bundle();
    let mut once = Graph::new();
    ingest_bundle(&mut once, &bundle).map_err(|e| e.to_string())?;
    let mut twice = once.clone();
    ingest_bundle(&mut twice, &bundle).map_err(|e| e.to_string())?;
    ensure(twice.to_dump() == once.to_dump(), || "second ingest changed the dump".into())?;
    for seed in 0..50 {
        let mut g = Graph::new();
        ingest_bundle(&mut g, &fixture::permuted(&bundle, &mut gen::rng(seed))).map_err(|e| e.to_string())?;
        ensure(g == once, || format!("permutation {seed} gave a different graph"))?;
        ensure(g.to_dump() == once.to_dump(), || format!("permutation {seed} gave a different dump"))?;
    }
    Ok("twice == once byte-equal; 50/50 row permutations equal".into())
}

fn vocabulary_convergence() -> Outcome {
    let base = fixture::graph();
    let canonical = canonical_form(&base)?;
    for enc in [&ZHANG, &WANG, &LCIO] {
        let source = encode(&base, enc);
        ensure(source != base, || format!("{} encoding changed nothing", enc.ontology))?;
        let (g, _) = translate_graph(&source, &builtin_mappings(), &builtin_schema()).map_err(|e| format!("{e:?}"))?;
        ensure(canonical_form(&g)? == canonical, || format!("{} does not converge", enc.ontology))?;
    }
    Ok("Zhang, Wang and LciO encodings all reach the canonical graph".into())
}

fn reported(g: &Graph) -> BTreeSet<(EntityId, ViolationKind)> {
    validate_graph(g, &builtin_schema()).into_iter().map(|v| (v.target, v.kind)).collect()
}

fn defect_detection() -> Outcome {
    let base = fixture::graph();
    ensure(reported(&base).is_empty(), || "fixture does not conform".into())?;
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    let mut score = |expected: &BTreeSet<(EntityId, ViolationKind)>, got: &BTreeSet<(EntityId, ViolationKind)>| {
        tp += expected.intersection(got).count();
        fp += got.difference(expected).count();
        fn_ += expected.difference(got).count();
    };
    let mut runs = 0;
    for kind in ViolationKind::ALL {
        for seed in 0..20 {
            let mut g = base.clone();
            let target = inject(&mut g, kind, &mut gen::rng(seed), &mut BTreeSet::new());
            score(&BTreeSet::from([(target, kind)]), &reported(&g));
            runs += 1;
        }
    }
    let mut rng = gen::rng(99);
    for _ in 0..500 {
        let mut g = base.clone();
        let mut used = BTreeSet::new();
        let mut expected = BTreeSet::new();
        for _ in 0..rng.gen_range(1..=5) {
            let kind = *ViolationKind::ALL.choose(&mut rng).unwrap();
            expected.insert((inject(&mut g, kind, &mut rng, &mut used), kind));
        }
        score(&expected, &reported(&g));
        runs += 1;
    }
    let precision = tp as f64 / (tp + fp) as f64;
    let recall = tp as f64 / (tp + fn_) as f64;
    ensure(precision == 1.0 && recall == 1.0, || {
        format!("precision {precision:.4} recall {recall:.4} (tp {tp}, fp {fp}, fn {fn_})")
    })?;
    Ok(format!("{runs} injected graphs, precision 1.0, recall 1.0 ({tp} violations)"))
}

fn quality_arithmetic() -> Outcome {
    // traceability: both fixture workflows cite a reference, then one stops
    let mut g = fixture::graph();
    let r = score_quality(&g, &builtin_schema());
    ensure((r.traceability.numerator, r.traceability.denominator, r.traceability.ratio) == (2, 2, 1.0), || {
        format!("fixture traceability {}", r.traceability)
    })?;
    let w2 = g.nodes_with_label("Workflow").find(|&w| g.node(w).unwrap().prop("id") == Some(&"W2".into()));
    let w2 = w2.ok_or("no W2")?;
    for (e, _) in g.neighbors(w2, Direction::Out, Some("HAS_REFERENCE")).unwrap() {
        g.delete(e.into(), false).unwrap();
    }
    let r = score_quality(&g, &builtin_schema());
    ensure((r.traceability.numerator, r.traceability.denominator, r.traceability.ratio) == (1, 2, 0.5), || {
        format!("1 of 2 referenced gave {}", r.traceability)
    })?;

    // consistency: 20 locations, 2 without the required code
    let mut g = Graph::new();
    for i in 0..20 {
        let mut p = PropertyMap::new();
        if i >= 2 {
            p.insert("code".into(), format!("L{i}").into());
        }
        g.create_node(["Location"], p).unwrap();
    }
    let r = score_quality(&g, &builtin_schema());
    ensure((r.consistency.numerator, r.consistency.denominator, r.consistency.ratio) == (18, 20, 0.9), || {
        format!("2 of 20 violating gave {}", r.consistency)
    })?;

    // consistency on the fixture with two injected defects: 95 of 97
    let mut g = fixture::graph();
    let mut used = BTreeSet::new();
    let mut rng = gen::rng(5);
    inject(&mut g, ViolationKind::ALL[0], &mut rng, &mut used);
    inject(&mut g, ViolationKind::ALL[4], &mut rng, &mut used);
    let total = g.node_count() + g.edge_count();
    let r = score_quality(&g, &builtin_schema());
    ensure(r.consistency.denominator == total && r.consistency.ratio == (total - 2) as f64 / total as f64, || {
        format!("fixture with 2 defects gave {}, {total} entities", r.consistency)
    })?;
    Ok(format!("traceability 1.0 -> 0.5, consistency 0.9 and {}", r.consistency))
}

/// `n` nodes and `4n` uniformly random edges, so the mean degree is 8.
fn random_graph(n: usize, seed: u64) -> Graph {
    let mut rng = gen::rng(seed);
    let mut g = Graph::new();
    let ids: Vec<NodeId> = (0..n).map(|_| g.create_node(["N"], PropertyMap::new()).unwrap()).collect();
    for _ in 0..4 * n {
        let (a, b) = (ids[rng.gen_range(0..n)], ids[rng.gen_range(0..n)]);
        let rel = if rng.gen() { "R" } else { "S" };
        g.create_edge(rel, a, b, PropertyMap::new()).unwrap();
    }
    g
}

/// Median wall time of one `neighbors` call over 1000 distinct degree-8
/// nodes, as `(cold, warm)`. Cold calls land on lines evicted by the probes
/// before them; warm calls repeat a call just made on the same node.
fn median_probe(g: &Graph, seed: u64) -> Result<(Duration, Duration), String> {
    let mut probes: Vec<NodeId> = g.nodes().map(|n| n.id()).filter(|&n| g.degree(n) == Some(8)).collect();
    ensure(probes.len() >= 1000, || format!("only {} degree-8 nodes", probes.len()))?;
    let mut rng = gen::rng(seed);
    probes.shuffle(&mut rng);
    probes.truncate(1000);
    let call = |n: NodeId| {
        let t = Instant::now();
        let adj = g.neighbors(black_box(n), Direction::Both, None).unwrap();
        black_box(&adj);
        t.elapsed()
    };
    let (mut cold, mut warm): (Vec<Duration>, Vec<Duration>) = probes.iter().map(|&n| (call(n), call(n))).unzip();
    cold.sort();
    warm.sort();
    Ok((cold[500], warm[500]))
}

/// Compares warm medians. A single array index already varies several-fold
/// between a cache-resident and a DRAM-resident graph, so cold timings
/// measure the memory hierarchy rather than the lookup; they are reported
/// alongside for reference.
fn adjacency_performance() -> Outcome {
    let small = random_graph(10_000, 1);
    let (small_cold, small_warm) = median_probe(&small, 2)?;
    drop(small);
    let start = Instant::now();
    let large = random_graph(1_000_000, 3);
    let build = start.elapsed();
    let (large_cold, large_warm) = median_probe(&large, 4)?;
    let ratio = large_warm.as_secs_f64() / small_warm.as_secs_f64();
    let cold_ratio = large_cold.as_secs_f64() / small_cold.as_secs_f64();
    let summary = format!(
        "median {small_warm:?} at 1e4 vs {large_warm:?} at 1e6 (ratio {ratio:.2}), 1e6 build {build:.1?}; \
         cold {small_cold:?} vs {large_cold:?} (ratio {cold_ratio:.2})"
    );
    ensure(ratio < 3.0 && build < Duration::from_secs(120), || summary.clone())?;
    Ok(summary)
}

fn end_to_end() -> Outcome {
    let dir = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    let run = |args: &[String]| -> Result<String, String> {
        let out = Command::new(env!("CARGO_BIN_EXE_lcag"))
            .current_dir(dir.path())
            .env_remove("LCAG_STORE")
            .args(args)
            .output()
            .map_err(|e| e.to_string())?;
        let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
        ensure(out.status.success(), || format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)))?;
        Ok(stdout)
    };
    let mut ingest: Vec<String> = ["--store", "e2e.store", "ingest"].map(String::from).into();
    for t in fixture::TABLES {
        ingest.push(format!("--{t}"));
        ingest.push(fixture::fixture_dir().join(format!("{t}.csv")).display().to_string());
    }
    run(&ingest)?;
    let out =
        run(&["--store", "e2e.store", "query", "--format", "json", "-e", fixture::YIELD_QUERY].map(String::from))?;
    let mut got = BTreeMap::new();
    for line in out.lines() {
        let row: serde_json::Value = serde_json::from_str(line).map_err(|e| format!("{line}: {e}"))?;
        ensure(row["total"]["u"] == "kg", || format!("unit in {line}"))?;
        let w = row["workflow"].as_str().ok_or_else(|| format!("workflow in {line}"))?;
        let q = row["total"]["q"].as_f64().ok_or_else(|| format!("total in {line}"))?;
        got.insert(w.to_string(), q);
    }
    let expected = fixture::yields_from_csv();
    ensure(got == expected, || format!("yields {got:?}, csv says {expected:?}"))?;
    let stats = run(&["--store", "e2e.store", "stats"].map(String::from))?;
    ensure(stats.contains("\nworkflows: 2\n"), || format!("stats:\n{stats}"))?;
    let shown: Vec<String> = got.iter().map(|(w, q)| format!("{w} {q} kg")).collect();
    Ok(format!("yields {} match the CSV; stats reports 2 workflows", shown.join(", ")))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("query engine matches brute-force oracle", query_oracle),
        ("label and adjacency indexes match scans", index_coherence),
        ("triple round trip", triple_round_trip),
        ("snapshot round trip and determinism", snapshot_round_trip),
        ("ingest idempotent and order-insensitive", ingest_idempotency),
        ("vocabularies converge", vocabulary_convergence),
        ("validator precision and recall", defect_detection),
        ("quality ratios match hand counts", quality_arithmetic),
        ("neighbor lookup independent of graph size", adjacency_performance),
        ("end-to-end yields and stats", end_to_end),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match result {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
