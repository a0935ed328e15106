//! End-to-end runs of the `tcq` binary on the fixtures.

use std::path::PathBuf;
use std::process::{Command, Output};

use tcq_core::syntax;

fn fixture(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name);
    p.to_str().unwrap().to_string()
}

fn tcq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tcq")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn run3(cmd: &str, onto: &str, base: &str, extra: &[&str]) -> Output {
    let (o, t, q) = (fixture(onto), fixture(&format!("{base}.tkb")), fixture(&format!("{base}.tcq")));
    let mut args = vec![cmd, o.as_str(), t.as_str(), q.as_str()];
    args.extend_from_slice(extra);
    tcq(&args)
}

#[test]
fn s34_rigid_is_unsat_and_flexible_is_sat_with_both_engines() {
    let o = run3("sat", "s34.onto", "s34", &["--engine", "both"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().next(), Some("UNSAT"));
    let o = run3("sat", "s34_flexible.onto", "s34", &["--engine", "both", "--certificate"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(out.lines().next(), Some("SAT"));
    assert!(out.contains("positions:"), "{out}");
}

#[test]
fn entailment_through_an_inclusion() {
    let o = run3("entail", "sub.onto", "sub", &["--engine", "both"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().next(), Some("ENTAILED"));
}

#[test]
fn malformed_inclusion_exits_with_a_parse_error() {
    let o = run3("sat", "bad.onto", "s34", &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("parse error at line 2"));
}

#[test]
fn json_report_is_one_object() {
    let o = run3("sat", "s34_flexible.onto", "s34", &["--json", "--certificate"]);
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["command"], "sat");
    assert_eq!(v["verdict"], "SAT");
    assert_eq!(v["engine"], "solver");
    assert!(v["details"]["positions"].is_array());
}

#[test]
fn consistency_per_time_point() {
    let (o, t) = (fixture("sub.onto"), fixture("sub.tkb"));
    let out = tcq(&["consistent", &o, &t]);
    assert_eq!(stdout(&out).lines().next(), Some("CONSISTENT"));
}

#[test]
fn certain_answers_by_repeated_entailment() {
    let o = run3("answers", "answers.onto", "answers", &["--engine", "both"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("answers: (ann)\n"), "{out}");
    assert!(out.contains("count: 1\n"), "{out}");
}

#[test]
fn too_many_candidate_answers_is_unknown() {
    let dir = tempfile::tempdir().unwrap();
    let tkb: String = "@0:\n".to_string() + &(0..300).map(|k| format!("A(i{k})\n")).collect::<String>();
    std::fs::write(dir.path().join("k.onto"), "concept A\nrole R\n").unwrap();
    std::fs::write(dir.path().join("k.tkb"), tkb).unwrap();
    std::fs::write(dir.path().join("k.tcq"), "R(?x,?y)").unwrap();
    let p = |n: &str| dir.path().join(n).to_str().unwrap().to_string();
    let o = tcq(&["answers", &p("k.onto"), &p("k.tkb"), &p("k.tcq")]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn rewrite_prints_formulas() {
    let o = run3("rewrite", "s34_flexible.onto", "s34", &[]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(out.lines().next(), Some("SAT"));
    assert!(out.contains("(define (p1 t0) (A a t0))"), "{out}");
    let o = run3("rewrite", "s34.onto", "s34", &["--json"]);
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["verdict"], "UNSAT");
}

#[test]
fn bool2krom_writes_parseable_krom_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run3("bool2krom", "gci.onto", "gci", &["--out", out]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
    let read = |n: &str| std::fs::read_to_string(dir.path().join(n)).unwrap();
    let (mut tkb, extended) = syntax::parse_kb(&read("reduced.onto"), &read("reduced.tkb")).unwrap();
    assert!(extended.is_empty());
    assert!(tkb.ontology.cis.iter().all(|c| c.is_krom()));
    let phi = syntax::parse_tcq(&read("reduced.tcq"), &mut tkb.signature).unwrap();
    assert!(matches!(phi, tcq_core::model::Tcq::Implies(..)));
}

#[test]
fn oracle_finds_the_flexible_model() {
    let o = run3("oracle", "s34_flexible.onto", "s34", &["--domain", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().next(), Some("FOUND"));
}

#[test]
fn output_is_deterministic() {
    let a = run3("rewrite", "s34_flexible.onto", "s34", &[]);
    let b = run3("rewrite", "s34_flexible.onto", "s34", &[]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn fixtures_round_trip_through_the_printer() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    for base in ["s34", "sub", "answers", "gci"] {
        let onto = std::fs::read_to_string(dir.join(format!("{base}.onto"))).unwrap();
        let aboxes = std::fs::read_to_string(dir.join(format!("{base}.tkb"))).unwrap();
        let query = std::fs::read_to_string(dir.join(format!("{base}.tcq"))).unwrap();
        let (mut tkb, ext) = syntax::parse_kb(&onto, &aboxes).unwrap();
        let phi = syntax::parse_tcq(&query, &mut tkb.signature).unwrap();
        let onto2 = syntax::print_ontology(&tkb.signature, &tkb.ontology, &ext);
        let (mut tkb2, ext2) = syntax::parse_kb(&onto2, &syntax::print_tkb(&tkb.signature, &tkb.aboxes)).unwrap();
        let phi2 = syntax::parse_tcq(&syntax::print_tcq(&tkb.signature, &phi), &mut tkb2.signature).unwrap();
        assert_eq!(tkb2, tkb, "{base}");
        assert_eq!(ext2, ext, "{base}");
        assert_eq!(phi2, phi, "{base}");
    }
}
