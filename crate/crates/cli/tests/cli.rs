use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const FIXTURE_EDGES: &str = "12\t1\n12\t2\n13\t1\n13\t3\n14\t1\n14\t4\n23\t2\n23\t3\n24\t2\n24\t4\n34\t3\n34\t4\n";

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cliquedex"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn build_tree_golden() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["build", "tree", "--levels", "4", "--out", "t.csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("t.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "node,c1,c2,c3,c4");
    assert_eq!(lines.len(), 16);
    assert_eq!(lines[10], "10,1,2,5,10");
    let summary: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["rows"], 15);
    assert_eq!(summary["nulls"], 0);
}

#[test]
fn literal_tree_has_nulls() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["build", "tree", "--levels", "3", "--literal"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().nth(2), Some("2,,2,2"));
}

#[test]
fn cyclic_dag_is_a_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("cyc.tsv"), "a\tb\nb\tc\nc\ta\n").unwrap();
    let o = run(dir.path(), &["build", "dag", "--edges", "cyc.tsv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("cycle"), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
}

#[test]
fn verify_all() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["verify", "--all", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let total = out.lines().last().unwrap();
    let fields: Vec<&str> = total.split(',').collect();
    assert_eq!(fields[0], "total");
    assert!(fields[1].parse::<u64>().unwrap() > 1000);
    assert_eq!(fields[2], "0");
}

#[test]
fn usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["bench"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!stderr(&o).is_empty());
    let o = run(dir.path(), &["build", "dag", "--edges", "missing.tsv"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(dir.path(), &["build", "tree", "--levels", "3", "--out", "nowhere/t.csv"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(dir.path(), &["--help"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn dag_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("g.tsv"), FIXTURE_EDGES).unwrap();
    let o = run(p, &["build", "dag", "--edges", "g.tsv", "--out", "t.csv", "--sidecar", "c.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["verified"], true);
    assert!(summary["k"].as_u64().unwrap() >= summary["clique_lower_bound"].as_u64().unwrap());

    let o = run(p, &["export", "--edges", "g.tsv", "--out", "f.csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = run(p, &["verify", "--table", "t.csv", "--function", "f.csv", "--coloring", "c.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    // a table with a cell removed no longer verifies
    let table = fs::read_to_string(p.join("t.csv")).unwrap();
    let broken = table.replacen("\n1,12,", "\n1,,", 1);
    assert_ne!(broken, table);
    fs::write(p.join("bad.csv"), broken).unwrap();
    let o = run(p, &["verify", "--table", "bad.csv", "--function", "f.csv", "--coloring", "c.json"]);
    assert_eq!(o.status.code(), Some(2));

    let o = run(p, &["materialize", "--function", "f.csv", "--coloring", "c.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), table);
}

#[test]
fn down_coloring_json() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("g.tsv"), FIXTURE_EDGES).unwrap();
    let o = run(dir.path(), &["color", "--edges", "g.tsv", "--down", "--exact"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["lower"], 3);
    assert_eq!(v["upper"], 4);
    assert_eq!(v["exact"], 4);
    assert_eq!(v["k"], 4);
    assert_eq!(v["colors"].as_object().unwrap().len(), 10);
}

#[test]
fn intervals_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("iv.csv"), "id,x,y\na,0,2\nb,1,3\nc,4,5\n").unwrap();
    let o = run(p, &["build", "intervals", "--input", "iv.csv", "--verify", "--out", "t.csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["k"], 2);
    assert_eq!(v["verified"], true);
    for extra in [&[][..], &["--bucketed"][..]] {
        let mut args = vec!["query-intervals", "--input", "iv.csv", "--a", "1.5", "--b", "3.5"];
        args.extend_from_slice(extra);
        let o = run(p, &args);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert_eq!(stdout(&o), "a\nb\n");
    }
    let o = run(p, &["query-intervals", "--input", "iv.csv", "--a", "-3", "--b", "-1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "");
    let o = run(p, &["query-intervals", "--input", "iv.csv", "--a", "3", "--b", "1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn tree_queries_and_index() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let o = run(p, &["query-tree", "--k", "5", "--levels", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "1\n2\n5\n10\n11\n");

    run(p, &["build", "tree", "--levels", "4", "--out", "t.csv"]);
    let mut fact = String::from("rid,acc,m\n");
    for k in 1..=15 {
        fact.push_str(&format!("{},{k},{k}\n", k - 1));
    }
    fact.push_str("15,99,1000\n");
    fs::write(p.join("fact.csv"), fact).unwrap();

    let o = run(p, &["query-tree", "--k", "5", "--table", "t.csv", "--fact", "fact.csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "rid,acc,m\n0,1,1\n1,2,2\n4,5,5\n9,10,10\n10,11,11\n");

    let o = run(p, &["query", "--fact", "fact.csv", "--table", "t.csv", "--expr", "c2 = '2' & !c4 = '9'", "--check"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    // 2,4,5,8,10,11 (9 excluded)
    assert_eq!(v["rows"], 6);
    assert_eq!(v["sum"], 40);

    let o = run(p, &["index", "--fact", "fact.csv", "--table", "t.csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().next(), Some("column,entry,rows,bytes"));
    assert!(out.lines().any(|l| l.starts_with("1,1,15,")));
    assert!(stderr(&o).contains("1 unresolved"));

    let o = run(p, &["export", "--table", "t.csv", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["k"], 4);
    assert_eq!(v["rows"].as_array().unwrap().len(), 15);
}

#[test]
fn bench_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let args = ["bench", "--seed", "3", "--rows", "20000", "--dag-nodes", "300", "--query", "single:1/24", "--query", "triple:1/24"];
    let a = run(p, &args);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    let b = run(p, &args);
    let strip = |o: &Output| -> Vec<String> {
        // drop the two timing columns
        stdout(o)
            .lines()
            .map(|l| l.split(',').take(13).collect::<Vec<_>>().join(","))
            .collect()
    };
    assert_eq!(strip(&a), strip(&b));
    assert_eq!(strip(&a).len(), 3);
}
