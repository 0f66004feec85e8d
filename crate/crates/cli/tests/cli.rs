use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lcag_core::graph::write_snapshot;
use lcag_core::harmonize::builtin_mappings;
use lcag_testkit::fixture;
use lcag_testkit::vocab::{encode, ZHANG};
use tempfile::TempDir;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn lcag_in(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_lcag"));
    cmd.current_dir(dir).env_remove("LCAG_STORE").args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    let Output { status, stdout, stderr } = cmd.output().unwrap();
    Run {
        code: status.code().unwrap(),
        stdout: String::from_utf8(stdout).unwrap(),
        stderr: String::from_utf8(stderr).unwrap(),
    }
}

fn lcag(dir: &Path, args: &[&str]) -> Run {
    lcag_in(dir, args, &[])
}

fn table(name: &str) -> String {
    fixture::fixture_dir().join(format!("{name}.csv")).to_str().unwrap().to_string()
}

fn ingest_args(store: &str) -> Vec<String> {
    let mut args = vec!["--store".to_string(), store.to_string(), "ingest".to_string()];
    for t in fixture::TABLES {
        args.push(format!("--{t}"));
        args.push(table(t));
    }
    args
}

/// A temp dir with the fixture ingested into `s.store`.
fn ingested() -> (TempDir, PathBuf) {
    let dir = TempDir::new().unwrap();
    let args = ingest_args("s.store");
    let r = lcag(dir.path(), &args.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(r.code, 0, "{}", r.stderr);
    let store = dir.path().join("s.store");
    (dir, store)
}

#[test]
fn fixture_end_to_end() {
    let (dir, _) = ingested();
    let d = dir.path();
    let stats = lcag(d, &["--store", "s.store", "stats"]);
    assert_eq!(stats.code, 0);
    assert!(stats.stdout.contains("workflows: 2\n"), "{}", stats.stdout);

    let count = lcag(d, &["--store", "s.store", "query", "-e", "MATCH (a:Activity) RETURN COUNT(*)"]);
    assert_eq!(count.stdout, "COUNT(*)\n10\n");

    let json = lcag(d, &["--store", "s.store", "query", "--format", "json", "-e", fixture::YIELD_QUERY]);
    assert_eq!(
        json.stdout,
        "{\"workflow\":\"W1\",\"total\":{\"q\":0.87,\"u\":\"kg\",\"unc\":{\"kind\":\"none\"}}}\n\
         {\"workflow\":\"W2\",\"total\":{\"q\":1.0,\"u\":\"kg\",\"unc\":{\"kind\":\"none\"}}}\n"
    );

    std::fs::write(d.join("q.txt"), "MATCH (w:Workflow) RETURN w.id ORDER BY w.id DESC").unwrap();
    assert_eq!(lcag(d, &["--store", "s.store", "query", "-f", "q.txt"]).stdout, "w.id\nW2\nW1\n");

    let v = lcag(d, &["--store", "s.store", "validate", "--strict"]);
    assert_eq!((v.code, v.stdout.as_str()), (0, ""));
    let fair = lcag(d, &["--store", "s.store", "fair", "--json"]);
    assert!(fair.stdout.starts_with("{\"findable\":{\"passed\":true"), "{}", fair.stdout);
    let score = lcag(d, &["--store", "s.store", "score", "--json"]);
    assert!(
        score.stdout.contains("\"traceability\":{\"ratio\":1.0,\"numerator\":2,\"denominator\":2"),
        "{}",
        score.stdout
    );
}

#[test]
fn ingest_twice_is_ingest_once() {
    let (dir, store) = ingested();
    let once = std::fs::read(&store).unwrap();
    let stats_once = lcag(dir.path(), &["--store", "s.store", "stats"]).stdout;
    let args = ingest_args("s.store");
    let r = lcag(dir.path(), &args.iter().map(String::as_str).collect::<Vec<_>>());
    assert!(r.stdout.contains("nodes created 0"), "{}", r.stdout);
    assert_eq!(std::fs::read(&store).unwrap(), once);
    assert_eq!(lcag(dir.path(), &["--store", "s.store", "stats"]).stdout, stats_once);
}

#[test]
fn read_commands_leave_the_store_alone() {
    let (dir, store) = ingested();
    let d = dir.path();
    let before = std::fs::read(&store).unwrap();
    for args in [
        &["stats"][..],
        &["validate"],
        &["validate", "--strict"],
        &["score"],
        &["fair", "--json"],
        &["query", "-e", "MATCH (n) RETURN n"],
        &["query", "-e", "MATCH (n RETURN"],
        &["export-triples", "-o", "t.nt"],
    ] {
        let mut full = vec!["--store", "s.store"];
        full.extend_from_slice(args);
        lcag(d, &full);
        assert_eq!(std::fs::read(&store).unwrap(), before, "{args:?}");
    }
    assert!(!d.join("s.store.bak").exists());
}

#[test]
fn triples_export_is_stable_and_reimports() {
    let (dir, store) = ingested();
    let d = dir.path();
    assert_eq!(lcag(d, &["--store", "s.store", "export-triples", "-o", "a.nt"]).code, 0);
    assert_eq!(lcag(d, &["--store", "s.store", "export-triples", "-o", "b.nt"]).code, 0);
    let a = std::fs::read(d.join("a.nt")).unwrap();
    assert_eq!(a, std::fs::read(d.join("b.nt")).unwrap());

    let r = lcag(d, &["--store", "copy.store", "import-triples", "-i", "a.nt"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(std::fs::read(d.join("copy.store")).unwrap(), std::fs::read(&store).unwrap());

    std::fs::write(d.join("bad.nt"), "<a> <b> .\n").unwrap();
    let r = lcag(d, &["--store", "copy.store", "import-triples", "-i", "bad.nt"]);
    assert_eq!(r.code, 2);
    assert_eq!(std::fs::read(d.join("copy.store")).unwrap(), std::fs::read(&store).unwrap());
}

#[test]
fn harmonize_rewrites_and_keeps_backup() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let canonical = fixture::graph();
    let mut bytes = Vec::new();
    write_snapshot(&encode(&canonical, &ZHANG), &mut bytes).unwrap();
    std::fs::write(d.join("z.store"), &bytes).unwrap();
    // the mapping table shipped next to the fixture is the builtin one
    let shipped = fixture::fixture_dir().join("../builtin_mappings.csv");
    assert_eq!(std::fs::read_to_string(&shipped).unwrap(), builtin_mappings().to_csv());

    let r = lcag(d, &["--store", "z.store", "harmonize", "--mappings", shipped.to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.contains("relation hasInflow -> HAS_INPUT: 12"), "{}", r.stdout);
    assert!(r.stderr.contains("untranslated property feedstock"), "{}", r.stderr);
    assert_eq!(std::fs::read(d.join("z.store.bak")).unwrap(), bytes);
    let mut want = Vec::new();
    write_snapshot(&canonical, &mut want).unwrap();
    assert_eq!(std::fs::read(d.join("z.store")).unwrap(), want);

    // an incoherent table is refused before the store is touched
    std::fs::write(
        d.join("bad.csv"),
        "source_ontology,source_term,kind,canonical_term,direction\nX,foo,class,Widget,\n",
    )
    .unwrap();
    let r = lcag(d, &["--store", "z.store", "harmonize", "--mappings", "bad.csv"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("unknown_canonical_term"), "{}", r.stderr);
    assert_eq!(std::fs::read(d.join("z.store")).unwrap(), want);
}

#[test]
fn strict_modes_exit_one() {
    let (dir, store) = ingested();
    let d = dir.path();
    let before = std::fs::read(&store).unwrap();
    std::fs::write(
        d.join("w.csv"),
        "workflow_id,step_index,activity_name,stage,direction,flow_name,flow_kind,amount,unit,unc_kind,unc_a,unc_b\n\
         W3,0,mixing,production,input,water,elementary,1,kg,,,\n\
         W3,1,boiling,production,sideways,steam,intermediate,1,kg,,,\n",
    )
    .unwrap();
    let r = lcag(d, &["--store", "s.store", "ingest", "--workflow", "w.csv", "--strict"]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("line 3"), "{}", r.stderr);
    assert_eq!(std::fs::read(&store).unwrap(), before);

    let r = lcag(d, &["--store", "s.store", "ingest", "--workflow", "w.csv"]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.contains("rows rejected 1"));
    // W3 has no reference, agent or metadata but is still schema-valid
    assert_eq!(lcag(d, &["--store", "s.store", "validate", "--strict"]).code, 0);

    std::fs::write(d.join("schema.txt"), "version strict/1\nclass Workflow requires id:text, owner:text\n").unwrap();
    let r = lcag(d, &["--store", "s.store", "validate", "--strict", "--schema", "schema.txt"]);
    assert_eq!(r.code, 1);
    assert!(r.stdout.lines().any(|l| l.contains("missing_required_property")), "{}", r.stdout);
    assert_eq!(lcag(d, &["--store", "s.store", "validate", "--schema", "schema.txt"]).code, 0);
}

#[test]
fn usage_and_format_errors_exit_two() {
    let (dir, _) = ingested();
    let d = dir.path();
    assert_eq!(lcag(d, &[]).code, 2);
    assert_eq!(lcag(d, &["--store", "s.store", "query"]).code, 2);
    assert_eq!(lcag(d, &["--store", "s.store", "ingest"]).code, 2);
    let r = lcag(d, &["--store", "s.store", "query", "-e", "MATCH (a RETURN a"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("line 1"), "{}", r.stderr);
    std::fs::write(d.join("bad.csv"), "id,name\n1,x\n").unwrap();
    assert_eq!(lcag(d, &["--store", "s.store", "ingest", "--agent", "bad.csv"]).code, 2);
    let r = lcag(d, &["--store", "missing.store", "stats"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("lcag ingest"), "{}", r.stderr);
    assert_eq!(lcag(d, &["--store", "no/such/dir/s.store", "stats"]).code, 2);
    std::fs::write(d.join("junk.store"), "not a snapshot\n").unwrap();
    assert_eq!(lcag(d, &["--store", "junk.store", "stats"]).code, 2);
}

#[test]
fn query_runtime_errors_exit_one() {
    let (dir, _) = ingested();
    let r = lcag(dir.path(), &["--store", "s.store", "query", "-e", "MATCH ()-[e:HAS_INPUT]->() RETURN SUM(e.amount)"]);
    // kg and kWh inputs cannot be summed
    assert_eq!(r.code, 1, "{}", r.stdout);
    assert!(r.stderr.contains("kWh") || r.stderr.contains("kg"), "{}", r.stderr);
}

#[test]
fn store_resolution_order() {
    let (dir, _) = ingested();
    let d = dir.path();
    std::fs::copy(d.join("s.store"), d.join("env.store")).unwrap();
    std::fs::create_dir(d.join("cfg")).unwrap();
    std::fs::copy(d.join("s.store"), d.join("cfg/file.store")).unwrap();
    let stats = ["stats"];

    // environment only
    let r = lcag_in(d, &stats, &[("LCAG_STORE", "env.store")]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    // config file beats the environment; its paths are relative to itself
    std::fs::write(d.join(".lcag.conf"), "store = cfg/file.store\n").unwrap();
    std::fs::remove_file(d.join("env.store")).unwrap();
    assert_eq!(lcag_in(d, &stats, &[("LCAG_STORE", "env.store")]).code, 0);
    std::fs::write(d.join("other.conf"), "store = missing.store\n").unwrap();
    let r = lcag_in(d, &["--config", "other.conf", "stats"], &[("LCAG_STORE", "s.store")]);
    assert!(r.stderr.contains("missing.store"), "{}", r.stderr);
    // the flag beats both
    let r = lcag_in(d, &["--config", "other.conf", "--store", "s.store", "stats"], &[("LCAG_STORE", "env.store")]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    // output format from the config file
    std::fs::write(d.join("json.conf"), "store = s.store\nformat = json\n").unwrap();
    let r = lcag(d, &["--config", "json.conf", "query", "-e", "MATCH (w:Workflow {id: 'W1'}) RETURN w.id"]);
    assert_eq!(r.stdout, "{\"w.id\":\"W1\"}\n");
    std::fs::write(d.join("bad.conf"), "colour = red\n").unwrap();
    assert_eq!(lcag(d, &["--config", "bad.conf", "stats"]).code, 2);
}
