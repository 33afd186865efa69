use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const NESTED: &str = "1 f1 entry\n2 | f2 entry\n3 | | f2 entry\n4 | | f2 exit\n5 | f2 exit\n6 f1 exit\n";

fn tracent(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tracent"))
        .args(args)
        .env_remove("TRACENT_INDEX")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// `(rank, class, trace, distance)` rows after a header line.
fn parse_rows(out: &str, sep: char) -> Vec<(usize, String, String, f64)> {
    out.lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = if sep == ' ' { l.split_whitespace().collect() } else { l.split(sep).collect() };
            (f[0].parse().unwrap(), f[1].to_string(), f[2].to_string(), f[3].parse().unwrap())
        })
        .collect()
}

/// A flat trace: `a` calling `extra` further distinct functions.
fn flat_trace(extra: usize) -> String {
    let mut s = String::from("a entry\n");
    for i in 0..extra {
        s.push_str(&format!("g{i} entry\ng{i} exit\n"));
    }
    s.push_str("a exit\n");
    s
}

/// Five traces whose Tsallis q=0, l=1, F fingerprints (distinct functions
/// minus one) sit at distances 7, 0, 9, 7, 9 from a one-function query.
fn ranking_fixture(dir: &Path) -> (String, String) {
    let traces = [("t1", "d2", 7), ("t2", "d4", 0), ("t3", "d2", 9), ("t4", "d3", 7), ("t5", "d1", 9)];
    let mut manifest = String::from("trace_file,class_id\n");
    for (id, class, extra) in traces {
        fs::write(dir.join(format!("{id}.trace")), flat_trace(extra)).unwrap();
        manifest.push_str(&format!("{id}.trace,{class}\n"));
    }
    fs::write(dir.join("manifest.csv"), manifest).unwrap();
    fs::write(dir.join("query.trace"), "a entry\na entry\na exit\na exit\n").unwrap();
    (
        dir.join("manifest.csv").to_str().unwrap().to_string(),
        dir.join("query.trace").to_str().unwrap().to_string(),
    )
}

#[test]
fn fingerprint_of_nested_trace() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("nested.trace");
    fs::write(&t, NESTED).unwrap();
    let o = tracent(&["fingerprint", t.to_str().unwrap(), "--spec", "S,1,1,F"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "0.918296\n");

    let o = tracent(&["--format", "csv", "fingerprint", t.to_str().unwrap(), "--spec", "S,1,1,F"]);
    assert_eq!(stdout(&o), "entropy,q,l,c,value\nS,1,1,F,0.9182958340544896\n");

    let o = tracent(&["fingerprint", t.to_str().unwrap(), "--grid", "default"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("TraceTooShort"), "{}", stderr(&o));
}

#[test]
fn query_reproduces_tied_ranking() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, query) = ranking_fixture(dir.path());
    let index = dir.path().join("fixture.idx");
    let index = index.to_str().unwrap();
    let o = tracent(&["ingest", &manifest, "--index", index, "--spec", "T,0,1,F"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("ingested 5 traces"));

    let o = tracent(&["--format", "csv", "query", &query, "--index", index, "--top", "3", "--spec", "T,0,1,F"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = parse_rows(&stdout(&o), ',');
    let expected = [(1, "d4", "t2.trace", 0.0), (3, "d2", "t1.trace", 7.0), (3, "d3", "t4.trace", 7.0)];
    assert_eq!(csv.len(), expected.len());
    for (got, want) in csv.iter().zip(expected) {
        assert_eq!((got.0, got.1.as_str(), got.2.as_str()), (want.0, want.1, want.2));
        assert!((got.3 - want.3).abs() < 1e-9, "{got:?}");
    }

    let o = tracent(&["query", &query, "--index", index, "--top", "3", "--spec", "T,0,1,F"]);
    let table = parse_rows(&stdout(&o), ' ');
    assert_eq!(table.len(), csv.len());
    for (t, c) in table.iter().zip(&csv) {
        assert_eq!((t.0, &t.1, &t.2), (c.0, &c.1, &c.2));
        assert!((t.3 - c.3).abs() < 1e-5);
    }

    // Full-grid query of a one-spec index normalizes by the maxima.
    let o = tracent(&["query", &query, "--index", index, "--top", "3"]);
    let ranks: Vec<(usize, String)> = parse_rows(&stdout(&o), ' ').into_iter().map(|r| (r.0, r.1)).collect();
    assert_eq!(ranks, vec![(1, "d4".to_string()), (3, "d2".to_string()), (3, "d3".to_string())]);

    let o = Command::new(env!("CARGO_BIN_EXE_tracent"))
        .args(["query", &query, "--top", "1", "--spec", "T,0,1,F", "--format", "csv"])
        .env("TRACENT_INDEX", index)
        .output()
        .unwrap();
    let rows = parse_rows(&stdout(&o), ',');
    assert_eq!(rows.len(), 1);
    assert_eq!((rows[0].1.as_str(), rows[0].3), ("d4", 0.0));

    let o = tracent(&["query", &query, "--index", index, "--spec", "S,1,1,F"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("SpecNotInGrid"));

    // Appending the same traces again collides on ids.
    let o = tracent(&["ingest", &manifest, "--index", index]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("DuplicateTraceId"));
}

#[test]
fn module_errors_name_the_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.idx");
    fs::write(&bad, b"not an index").unwrap();
    let t = dir.path().join("t.trace");
    fs::write(&t, NESTED).unwrap();
    let o = tracent(&["query", t.to_str().unwrap(), "--index", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("CorruptIndex") && err.lines().count() == 1, "{err}");

    let o = tracent(&["query", t.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = tracent(&["synth", "--out", dir.path().join("s").to_str().unwrap(), "--rate", "1.5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("InvalidConfig"));
}

fn read_tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn synth_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = tracent(&["synth", "--classes", "2", "--per-class", "1", "--rate", "0", "--seed", "7", "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let (ta, tb) = (read_tree(&a), read_tree(&b));
    assert_eq!(ta.len(), 3);
    assert_eq!(ta, tb);
    assert!(String::from_utf8_lossy(&ta[0].1).starts_with("trace_file,class_id\n"));
}

#[test]
fn crossval_and_bench_on_small_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    let o = tracent(&["synth", "--classes", "4", "--per-class", "6", "--seed", "3", "--out", corpus.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let index = dir.path().join("c.idx");
    let index = index.to_str().unwrap();
    let manifest = corpus.join("manifest.csv");
    let o = tracent(&["ingest", manifest.to_str().unwrap(), "--index", index, "--raw"]);
    assert!(o.status.success(), "{}", stderr(&o));

    let cv = |threads: &str| {
        let o = tracent(&["--threads", threads, "--format", "csv", "crossval", "--index", index, "--folds", "3", "--seed", "9"]);
        assert!(o.status.success(), "{}", stderr(&o));
        stdout(&o)
    };
    let csv = cv("1");
    assert_eq!(csv, cv("2"));
    let means: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(means.len(), 4);
    assert!(means.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(*means.last().unwrap(), 1.0);

    let o = tracent(&["crossval", "--index", index, "--folds", "3", "--w", "1,2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 3);

    let refs = format!(
        "{},{}",
        corpus.join("traces/d01_001.trace").display(),
        corpus.join("traces/d02_001.trace").display()
    );
    let o = tracent(&["--format", "csv", "bench", "--index", index, "--refs", &refs]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 1 + 4 * 2);
    assert!(out.lines().skip(1).all(|l| l.split(',').nth(3).unwrap().parse::<f64>().unwrap() > 0.0));
}
