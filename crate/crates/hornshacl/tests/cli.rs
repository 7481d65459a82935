//! End-to-end runs of the command-line binary: exit codes, report shape
//! and the dump formats.

use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output};

use hornshacl::format::{parse_abox, parse_shapes_with, ShapeParseOptions};

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
        .display()
        .to_string()
}

fn hornshacl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hornshacl"))
        .args(args)
        .output()
        .expect("the binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn validate(kb: &str, shapes: &str, targets: &str, extra: &[&str]) -> Output {
    let (tbox, abox) = (data(&format!("{kb}.tbox")), data(&format!("{kb}.abox")));
    let (shapes, targets) = (data(shapes), data(targets));
    let mut args = vec![
        "validate",
        "--tbox",
        &tbox,
        "--abox",
        &abox,
        "--shapes",
        &shapes,
        "--targets",
        &targets,
    ];
    args.extend_from_slice(extra);
    hornshacl(&args)
}

#[test]
fn valid_targets_exit_zero() {
    let o = validate("positive", "positive.shacl", "a.targets", &[]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "VALID $s(@a)\n");
}

#[test]
fn violations_exit_one() {
    let o = validate("pet", "pet.shacl", "pet.targets", &[]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o), "VIOLATION $s(@linda)\n");
}

#[test]
fn inconsistent_knowledge_bases_exit_two() {
    for mode in ["direct", "rewrite", "pure-alchi", "pure-shaclb", "chase"] {
        let o = validate("clash", "negated.shacl", "a.targets", &["--mode", mode]);
        assert_eq!(o.status.code(), Some(2), "{mode}");
        assert_eq!(stdout(&o), "INCONSISTENT knowledge base\n");
    }
}

#[test]
fn input_errors_exit_three() {
    let o = hornshacl(&[
        "validate",
        "--tbox",
        &data("missing.tbox"),
        "--shapes",
        &data("negated.shacl"),
        "--targets",
        &data("a.targets"),
    ]);
    assert_eq!(o.status.code(), Some(3));
    let mut bad = tempfile::NamedTempFile::new().unwrap();
    writeln!(bad, "$s <- some [p.$t").unwrap();
    let path = bad.path().display().to_string();
    let o = hornshacl(&[
        "validate",
        "--shapes",
        &path,
        "--targets",
        &data("a.targets"),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error: "));
}

#[test]
fn unstratified_shapes_exit_four() {
    let o = hornshacl(&[
        "validate",
        "--shapes",
        &data("unstratified.shacl"),
        "--targets",
        &data("a.targets"),
    ]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn truncated_models_under_negation_exit_five() {
    let o = validate("chain", "negated.shacl", "a.targets", &["--depth", "4"]);
    assert_eq!(o.status.code(), Some(5));
    let o = validate(
        "chain",
        "negated.shacl",
        "a.targets",
        &["--mode", "rewrite"],
    );
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn json_reports_keep_their_key_order_and_are_stable() {
    let run = || {
        stdout(&validate(
            "positive",
            "positive.shacl",
            "a.targets",
            &["--format", "json"],
        ))
    };
    let json = run();
    assert_eq!(json, run());
    let keys = [
        "\"consistent\"",
        "\"mode\"",
        "\"targets\"",
        "\"shape\"",
        "\"node\"",
        "\"valid\"",
        "\"stats\"",
        "\"individuals\"",
        "\"nodes\"",
        "\"constraints\"",
        "\"evaluated_constraints\"",
        "\"strata\"",
    ];
    let positions: Vec<usize> = keys
        .iter()
        .map(|k| json.find(k).unwrap_or_else(|| panic!("{k} missing")))
        .collect();
    assert!(positions.windows(2).all(|w| w[0] < w[1]), "{json}");
    let value: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(value["mode"], "direct");
    assert_eq!(value["targets"][0]["valid"], true);
}

#[test]
fn build_model_names_anonymous_nodes_by_their_path() {
    let (tbox, abox) = (data("chain.tbox"), data("chain.abox"));
    let o = hornshacl(&[
        "build-model",
        "--tbox",
        &tbox,
        "--abox",
        &abox,
        "--depth",
        "2",
        "--emit",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("r(a,_:a.k0)\n"), "{out}");
    assert!(out.contains("r(_:a.k0,_:a.k0.k0)\n"), "{out}");
    let o = hornshacl(&[
        "build-model",
        "--tbox",
        &tbox,
        "--abox",
        &abox,
        "--depth",
        "2",
    ]);
    assert!(stdout(&o).contains("complete false"));
}

#[test]
fn chase_dumps_parse_as_atoms() {
    let (tbox, abox) = (data("positive.tbox"), data("positive.abox"));
    let o = hornshacl(&["chase", "--tbox", &tbox, "--abox", &abox]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let last = out.rsplit("# round").next().unwrap();
    let atoms: String = last
        .lines()
        .skip(1)
        .map(|l| format!("{}\n", l.replace("_:", "")))
        .collect();
    assert!(parse_abox(&atoms).is_ok(), "{atoms}");
    let (tbox, abox) = (data("chain.tbox"), data("chain.abox"));
    let o = hornshacl(&["chase", "--tbox", &tbox, "--abox", &abox, "--rounds", "3"]);
    assert_eq!(o.status.code(), Some(5));
}

#[test]
fn rewritings_are_shapes_files() {
    let (tbox, shapes) = (data("negative.tbox"), data("negative.shacl"));
    for mode in ["rewrite", "pure-alchi"] {
        let o = hornshacl(&[
            "rewrite", "--tbox", &tbox, "--shapes", &shapes, "--mode", mode,
        ]);
        assert_eq!(o.status.code(), Some(0), "{mode}");
        let text = stdout(&o);
        let options = ShapeParseOptions {
            allow_reserved: true,
        };
        assert!(parse_shapes_with(&text, options).is_ok(), "{mode}:\n{text}");
    }
    let o = hornshacl(&[
        "rewrite",
        "--tbox",
        &tbox,
        "--shapes",
        &shapes,
        "--mode",
        "pure-shaclb",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(!o.stdout.is_empty());
}

#[test]
fn selftest_catches_the_injected_bug() {
    let o = hornshacl(&["selftest", "--seed", "1", "--cases", "10"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let o = hornshacl(&[
        "selftest",
        "--seed",
        "1",
        "--cases",
        "100",
        "--inject-bug",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let value: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(value["counterexample"]["reason"].is_string());
}
