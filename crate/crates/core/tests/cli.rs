mod common;

use std::process::{Command, Output};

use common::fixture_path;
use mapkit::lang::{parse_instances, parse_mapping};

fn mapkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mapkit"))
        .args(args)
        .env_remove("MAPKIT_JOBS")
        .output()
        .expect("binary runs")
}

fn fx(name: &str) -> String {
    fixture_path(name).to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn chase_prints_solution_and_null_origins() {
    let o = mapkit(&["chase", &fx("takes_m12.map"), &fx("takes.inst")]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("Student(Chris, ?n1)."), "{out}");
    assert!(out.contains("Takes1(Chris, logic)."), "{out}");
    assert!(out.contains("// ?n1 = s of #2"), "{out}");
    let m = parse_mapping(&std::fs::read_to_string(fixture_path("takes_m12.map")).unwrap()).unwrap();
    let back = parse_instances(&out, &[m.target.clone()]).unwrap();
    assert_eq!(back.len(), 1);
}

#[test]
fn chase_of_an_empty_instance() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    let inst = dir.join("empty.inst");
    std::fs::write(&inst, "instance I over R1 { }\n").unwrap();
    let o = mapkit(&["chase", &fx("takes_m12.map"), inst.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("instance J over R2"));
}

#[test]
fn syntax_errors_exit_2_with_a_location() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    let bad = dir.join("bad.map");
    std::fs::write(&bad, "schema S { S/1 }\nschema T { T/1 }\nmap M : S -> T { S(x) -> T(x) \n").unwrap();
    let o = mapkit(&["parse", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("4:1"), "{}", stderr(&o));
    let missing = mapkit(&["parse", dir.join("missing.map").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn compose_outputs_a_parseable_so_tgd() {
    let o = mapkit(&["compose", &fx("takes_m12.map"), &fx("takes_m23.map")]);
    assert_eq!(o.status.code(), Some(0));
    let m = parse_mapping(&stdout(&o)).unwrap();
    assert!(m.so_tgd().is_some());
    assert_eq!(m.source.name(), "R1");
    assert_eq!(m.target.name(), "R3");
}

#[test]
fn compose_plain_removes_equalities() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    let out = dir.join("m13.map");
    let o = mapkit(&[
        "compose",
        &fx("emp_m12.map"),
        &fx("emp_m23.map"),
        "--plain",
        "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let written = std::fs::read_to_string(&out).unwrap();
    assert_eq!(written, stdout(&o));
    let m = parse_mapping(&written).unwrap();
    assert!(m.so_tgd().unwrap().is_plain());
}

#[test]
fn composing_mismatched_schemas_exits_3() {
    let o = mapkit(&["compose", &fx("emp_m12.map"), &fx("takes_m23.map")]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("schema mismatch"));
}

#[test]
fn invert_prints_a_reverse_mapping() {
    let o = mapkit(&["invert", &fx("paths.map")]);
    assert_eq!(o.status.code(), Some(0));
    let m = parse_mapping(&stdout(&o)).unwrap();
    assert_eq!(mapkit::lang::print_mapping(&m), stdout(&o));
    assert!(stdout(&o).contains("T -> S"));
}

#[test]
fn verify_exit_codes() {
    let pass = mapkit(&["verify", "--property", "fagin-inverse", &fx("uv.map"), &fx("uv_from_u.map")]);
    assert_eq!(pass.status.code(), Some(0));
    assert_eq!(stdout(&pass), "pass\n");

    let fail = mapkit(&[
        "verify",
        "--property",
        "fagin-inverse",
        &fx("projection.map"),
        &fx("projection_back.map"),
    ]);
    assert_eq!(fail.status.code(), Some(1));
    let text = stdout(&fail);
    let (verdict, rest) = text.split_once('\n').unwrap();
    assert_eq!(verdict, "fail");
    let schemas = [parse_mapping(&std::fs::read_to_string(fixture_path("projection.map")).unwrap())
        .unwrap()
        .source];
    let witnesses = parse_instances(rest, &schemas).unwrap();
    assert_eq!(witnesses.len(), 2, "{text}");

    let max = mapkit(&["verify", "--property", "max-recovery", &fx("paths.map"), &fx("paths_back.map")]);
    assert_eq!(max.status.code(), Some(0));
}

#[test]
fn verify_reports_inapplicable_checks() {
    // instances with an S fact have no solution, so the mapping is not total
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    let partial = dir.join("partial.map");
    std::fs::write(&partial, "schema S { S/1 } schema T { T/1 } map P : S -> T { S(x) -> false; }").unwrap();
    let o = mapkit(&["verify", "--property", "max-recovery", partial.to_str().unwrap(), &fx("copy_back.map")]);
    assert_eq!(o.status.code(), Some(4), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).starts_with("inapplicable"));
}

#[test]
fn certain_answers_of_a_copy_query() {
    let o = mapkit(&["certain", &fx("takes_m12.map"), &fx("takes.inst"), &fx("takes_copy.query")]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "(Chris, logic)\n");
    let none = mapkit(&["certain", &fx("takes_m12.map"), &fx("takes.inst"), &fx("takes_student.query")]);
    assert_eq!(none.status.code(), Some(0));
    assert_eq!(stdout(&none), "");
}

#[test]
fn json_output_round_trips() {
    let o = mapkit(&["--format", "json", "compose", &fx("emp_m12.map"), &fx("emp_m23.map")]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let text = v["mapping"].as_str().unwrap();
    let m = parse_mapping(text).unwrap();
    assert_eq!(mapkit::lang::print_mapping(&m), text);

    let f = mapkit(&[
        "--format",
        "json",
        "verify",
        "--property",
        "fagin-inverse",
        &fx("projection.map"),
        &fx("projection_back.map"),
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&f)).unwrap();
    assert_eq!(v["verdict"], "fail");
    assert_eq!(v["instances"].as_array().unwrap().len(), 2);
}

#[test]
fn output_is_deterministic_across_thread_counts() {
    let args = ["verify", "--property", "quasi-inverse", &fx("split.map"), &fx("split_back.map")];
    let one = mapkit(&[&["--jobs", "1"][..], &args[..]].concat());
    let many = mapkit(&[&["--jobs", "4"][..], &args[..]].concat());
    assert_eq!(one.status.code(), many.status.code());
    assert_eq!(stdout(&one), stdout(&many));
    let again = mapkit(&[&["--jobs", "4"][..], &args[..]].concat());
    assert_eq!(stdout(&many), stdout(&again));
}

#[test]
fn random_sweep_is_seeded() {
    let a = mapkit(&["--seed", "3", "verify", "--random", "4", "--property", "recovery"]);
    let b = mapkit(&["--seed", "3", "verify", "--random", "4", "--property", "recovery"]);
    assert_eq!(a.status.code(), Some(0), "{}", stdout(&a));
    assert_eq!(stdout(&a), stdout(&b));
    assert!(stdout(&a).starts_with("recovery: 4 pass"));
}
