mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use data_accounting::cli::{cmd_check, cmd_fuzz, cmd_run, Format, EXIT_DIVERGENCE, EXIT_INVALID, EXIT_OK};
use data_accounting::ra::Mutant;
use serde_json::Value;

struct Outcome {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run(pipeline: &Path, data: Option<&Path>, out: &Path, format: Format) -> Outcome {
    let (mut o, mut e) = (Vec::new(), Vec::new());
    let code = cmd_run(pipeline, data, out, format, &mut o, &mut e);
    Outcome {
        code,
        stdout: String::from_utf8(o).unwrap(),
        stderr: String::from_utf8(e).unwrap(),
    }
}

fn check(pipeline: &Path, data: Option<&Path>) -> Outcome {
    let (mut o, mut e) = (Vec::new(), Vec::new());
    let code = cmd_check(pipeline, data, Format::Text, &mut o, &mut e);
    Outcome {
        code,
        stdout: String::from_utf8(o).unwrap(),
        stderr: String::from_utf8(e).unwrap(),
    }
}

fn fuzz(seed: u64, iterations: u64, mutant: Mutant) -> (i32, String) {
    let mut o = Vec::new();
    let code = cmd_fuzz(seed, iterations, Format::Text, mutant, &mut o);
    (code, String::from_utf8(o).unwrap())
}

/// Writes an edited copy of the ship pipeline into `dir`.
fn edited_ship(dir: &Path, edit: impl FnOnce(&mut Value)) -> std::path::PathBuf {
    let text = fs::read_to_string(common::fixture("ship/ship.pipeline.json")).unwrap();
    let mut doc: Value = serde_json::from_str(&text).unwrap();
    edit(&mut doc);
    let p = dir.join("edited.pipeline.json");
    fs::write(&p, serde_json::to_string_pretty(&doc).unwrap()).unwrap();
    p
}

fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.is_dir() {
            for (k, v) in tree(&p) {
                out.insert(format!("{}/{k}", p.file_name().unwrap().to_string_lossy()), v);
            }
        } else {
            out.insert(p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap());
        }
    }
    out
}

#[test]
fn ship_run_lists_unaccounted_items() {
    let out = tempfile::tempdir().unwrap();
    let r = run(&common::fixture("ship/ship.pipeline.json"), None, out.path(), Format::Text);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    assert!(r.stdout.contains("unaccounted: Cat, Nut oil"));
    assert!(r.stdout.contains("unaccounted: Cat, Sailors"));
    for g in ["insured_value", "replacement_cost", "weight"] {
        for f in ["report.csv", "report.errors.csv", "dashboard.txt", "dashboard.json", "audit.json", "verdict.json"] {
            assert!(out.path().join(g).join(f).is_file(), "{g}/{f}");
        }
    }
}

#[test]
fn lookup_run_reports_missing_and_unused_groups() {
    let out = tempfile::tempdir().unwrap();
    let r = run(&common::fixture("lookup/lookup.pipeline.json"), None, out.path(), Format::Structured);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let dash: Value = serde_json::from_str(&r.stdout).unwrap();
    let groups = dash[0]["errors"].as_array().unwrap();
    let reasons: Vec<(&str, u64)> =
        groups.iter().map(|g| (g["reason"].as_str().unwrap(), g["records"].as_u64().unwrap())).collect();
    assert_eq!(reasons, vec![("missing", 3), ("unused", 2)]);
}

#[test]
fn sink_csv_rows_match_dashboard() {
    let out = tempfile::tempdir().unwrap();
    for p in ["ship/ship.pipeline.json", "lookup/lookup.pipeline.json", "orders/orders.pipeline.json"] {
        assert_eq!(run(&common::fixture(p), None, out.path(), Format::Text).code, EXIT_OK);
    }
    for graph in fs::read_dir(out.path()).unwrap() {
        let dir = graph.unwrap().path();
        let dash: Value = serde_json::from_str(&fs::read_to_string(dir.join("dashboard.json")).unwrap()).unwrap();
        for s in dash["sinks"].as_array().unwrap() {
            let name = s["name"].as_str().unwrap();
            let mut rdr = csv::Reader::from_path(dir.join(format!("{name}.csv"))).unwrap();
            assert_eq!(rdr.records().count() as u64, s["rows"].as_u64().unwrap(), "{}/{name}", dir.display());
            let errors = dir.join(format!("{name}.errors.csv"));
            let n = if errors.exists() { csv::Reader::from_path(errors).unwrap().records().count() } else { 0 };
            assert_eq!(n as u64, s["error_records"].as_u64().unwrap());
        }
    }
}

#[test]
fn unwired_port_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let p = edited_ship(tmp.path(), |doc| {
        let wires = doc["graphs"][0]["wires"].as_array_mut().unwrap();
        wires.retain(|w| w["from"] != "quoted.rejected");
        doc["graphs"][0]["nodes"].as_array_mut().unwrap().retain(|n| n["name"] != "unquoted");
    });
    let data = common::fixture("ship");
    let r = run(&p, Some(&data), &tmp.path().join("out"), Format::Text);
    assert_eq!(r.code, EXIT_INVALID);
    assert!(r.stderr.contains("UnconsumedPort(quoted.rejected)"), "{}", r.stderr);
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn check_accepts_every_fixture() {
    for p in ["ship/ship", "lookup/lookup", "orders/orders", "journal/journal"] {
        let r = check(&common::fixture(&format!("{p}.pipeline.json")), None);
        assert_eq!(r.code, EXIT_OK, "{p}: {}", r.stderr);
        assert!(r.stdout.starts_with("ok"));
    }
}

#[test]
fn check_rejects_cycle() {
    let tmp = tempfile::tempdir().unwrap();
    let p = edited_ship(tmp.path(), |doc| {
        let g = &mut doc["graphs"][2];
        let wires = g["wires"].as_array_mut().unwrap();
        wires.retain(|w| w["to"] != "report.in");
        wires.push(serde_json::json!({"from": "total.out", "to": "loop.left"}));
        wires.push(serde_json::json!({"from": "loop.out", "to": "keep.in"}));
        wires.retain(|w| w["from"] != "weigh.inner");
        wires.push(serde_json::json!({"from": "weigh.inner", "to": "loop.right"}));
        g["nodes"].as_array_mut().unwrap().push(serde_json::json!({"name": "loop", "op": "tagged_union"}));
    });
    let r = check(&p, Some(&common::fixture("ship")));
    assert_eq!(r.code, EXIT_INVALID);
    assert!(r.stderr.contains("Cycle"), "{}", r.stderr);
}

#[test]
fn check_rejects_missing_schema() {
    let tmp = tempfile::tempdir().unwrap();
    let p = edited_ship(tmp.path(), |doc| {
        doc["graphs"][2]["nodes"][1]["input"] = "no_such_input".into();
    });
    let r = check(&p, Some(&common::fixture("ship")));
    assert_eq!(r.code, EXIT_INVALID);
    assert!(r.stderr.contains("MissingSchema"), "{}", r.stderr);

    let p = edited_ship(tmp.path(), |doc| {
        doc["sources"]["items"]["schema"] = "absent.schema.json".into();
    });
    let r = check(&p, Some(&common::fixture("ship")));
    assert_eq!(r.code, EXIT_INVALID);
    assert!(r.stderr.contains("absent.schema.json"), "{}", r.stderr);
}

#[test]
fn unparseable_document_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("bad.pipeline.json");
    fs::write(&p, "{\"graphs\": [").unwrap();
    assert_eq!(check(&p, None).code, EXIT_INVALID);
    assert_eq!(run(&p, None, &tmp.path().join("out"), Format::Text).code, EXIT_INVALID);
}

#[test]
fn run_is_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for p in ["ship/ship.pipeline.json", "lookup/lookup.pipeline.json", "journal/journal.pipeline.json"] {
        let ra = run(&common::fixture(p), None, a.path(), Format::Structured);
        let rb = run(&common::fixture(p), None, b.path(), Format::Structured);
        assert_eq!(ra.stdout, rb.stdout);
    }
    let (ta, tb) = (tree(a.path()), tree(b.path()));
    assert!(ta.len() > 20);
    assert_eq!(ta, tb);
}

#[test]
fn fuzz_exit_codes() {
    let (code, out) = fuzz(0, 0, Mutant::None);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("0/0"));
    let (code, out) = fuzz(0, 1000, Mutant::None);
    assert_eq!(code, EXIT_OK, "{out}");
    let (code, out) = fuzz(0, 1000, Mutant::UnionWithoutDedup);
    assert_eq!(code, EXIT_DIVERGENCE);
    assert!(out.contains("counterexample"));
}

#[test]
fn fuzz_is_deterministic() {
    assert_eq!(fuzz(42, 200, Mutant::None), fuzz(42, 200, Mutant::None));
    assert_eq!(fuzz(42, 200, Mutant::UnionWithoutDedup), fuzz(42, 200, Mutant::UnionWithoutDedup));
}
