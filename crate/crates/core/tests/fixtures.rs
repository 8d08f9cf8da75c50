mod common;

use std::collections::{BTreeMap, BTreeSet};

use data_accounting::io::load_pipeline;
use data_accounting::pipeline::{conservation_check, render_dashboard, run, validate, RunOutput};
use data_accounting::{FieldValue, MonoidElement};

fn run_all(rel: &str) -> BTreeMap<String, RunOutput> {
    let (doc, inputs) = load_pipeline(&common::fixture(rel), None).unwrap();
    doc.graphs
        .iter()
        .map(|g| {
            assert_eq!(validate(g), vec![], "{}", g.name);
            let out = run(g, &inputs, &doc.spaces).unwrap();
            let verdict = conservation_check(&out.audit);
            assert!(verdict.passed, "{}: {:?}", g.name, verdict.violations);
            assert!(verdict.spaces.iter().all(|s| s.equal), "{}: {:?}", g.name, verdict.spaces);
            (g.name.clone(), out)
        })
        .collect()
}

fn error_descriptions(out: &RunOutput, sink: &str, field: &str) -> BTreeSet<String> {
    out.sinks[sink]
        .errors
        .iter()
        .filter_map(|e| e.record.get(field).and_then(FieldValue::as_text).map(String::from))
        .collect()
}

fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

#[test]
fn ship_reports_classify_items() {
    let runs = run_all("ship/ship.pipeline.json");
    assert_eq!(error_descriptions(&runs["insured_value"], "report", "Description"), set(&["Cat", "Nut oil"]));
    assert_eq!(error_descriptions(&runs["replacement_cost"], "report", "Description"), set(&["Cat", "Nut oil"]));
    assert_eq!(error_descriptions(&runs["weight"], "report", "Description"), set(&["Cat", "Sailors"]));
}

#[test]
fn ship_insured_value_totals() {
    let runs = run_all("ship/ship.pipeline.json");
    let totals: BTreeSet<MonoidElement> = runs["insured_value"].sinks["report"]
        .correct
        .rows()
        .iter()
        .filter_map(|r| match r.get("sum_insured_value") {
            Some(FieldValue::Summary(m)) => Some(m.clone()),
            _ => None,
        })
        .collect();
    // 2,000,000 + 10 * 20,000,000 + 1,000,000,000 + 200 * 36.7437 * 6.0575 USD,
    // and 5,000 * 0.0103 * 33.98 EUR.
    let expected = BTreeSet::from([
        MonoidElement::sum("USD", "1202044514.9926".parse().unwrap()),
        MonoidElement::sum("EUR", "1749.97".parse().unwrap()),
    ]);
    assert_eq!(totals, expected);
}

#[test]
fn ship_quotes_without_spot_price_reach_auxiliary_sinks() {
    let runs = run_all("ship/ship.pipeline.json");
    let sinks = &runs["insured_value"].sinks;
    assert_eq!(sinks["unquoted"].correct.len(), 1);
    assert_eq!(sinks["forward_quotes"].correct.len(), 1);
    assert!(sinks["unquoted"].errors.is_empty() && sinks["forward_quotes"].errors.is_empty());
}

#[test]
fn lookup_routes_misspellings_and_unused_references() {
    let runs = run_all("lookup/lookup.pipeline.json");
    let out = &runs["position_values"];
    let report = &out.sinks["report"];
    let by_reason = |reason: &str| -> Vec<String> {
        report
            .errors
            .iter()
            .filter(|e| e.stage == "price_lookup" && e.reason == reason)
            .map(|e| e.record.get("product").unwrap().to_string())
            .collect()
    };
    let mut missing = by_reason("missing");
    missing.sort();
    assert_eq!(missing, vec!["Nut oli", "Nut oli", "Nutela"]);
    let mut unused = by_reason("unused");
    unused.sort();
    assert_eq!(unused, vec!["Cocoa", "Sugar"]);
    assert_eq!(report.errors.len(), 5);

    // Zero dropped pids: 8 positions and 5 products all reach the sink.
    let mut reached = report.correct.pids();
    for e in &report.errors {
        reached.extend(e.pids().iter().copied());
    }
    assert_eq!(reached, out.audit.source_pids());
    assert_eq!(reached.len(), 13);

    // The misspelled rows leave through the left port.
    for e in report.errors.iter().filter(|e| e.reason == "missing") {
        let pid = *e.pids().iter().next().unwrap();
        let trace = out.audit.trace(pid);
        assert!(trace.contains(&("price_lookup".to_string(), "left/missing".to_string())), "{trace:?}");
    }

    let dash = render_dashboard(&out.audit, &out.sinks);
    let missing = dash.errors.iter().find(|g| g.reason == "missing").unwrap();
    assert_eq!(missing.labels, vec!["Nut oli".to_string(), "Nutela".to_string()]);
    assert_eq!(missing.summaries["units"], MonoidElement::sum("", 6.into()));
}

#[test]
fn order_summary_uses_every_monoid() {
    let runs = run_all("orders/orders.pipeline.json");
    let out = &runs["customer_summary"];
    let report = &out.sinks["report"];
    assert_eq!(report.correct.len(), 3);
    let acme = report
        .correct
        .rows()
        .iter()
        .find(|r| r.get("customer") == Some(&FieldValue::text("acme")))
        .unwrap();
    assert_eq!(
        acme.get("ids_order_id"),
        Some(&FieldValue::Summary(MonoidElement::ids([1001i64, 1003, 1007].map(FieldValue::Integer))))
    );
    assert_eq!(acme.get("sum_line_total"), Some(&FieldValue::Summary(MonoidElement::sum("USD", "102.5".parse().unwrap()))));
    let reasons: BTreeSet<&str> = report.errors.iter().map(|e| e.reason.as_str()).collect();
    assert_eq!(reasons, BTreeSet::from(["not_shipped"]));
    assert_eq!(report.errors.len(), 2);
}

#[test]
fn journal_balances_after_unposted_entry() {
    let runs = run_all("journal/journal.pipeline.json");
    let out = &runs["trial_balance"];
    let report = &out.sinks["report"];
    let mut total = MonoidElement::paccioli(0.into(), 0.into()).unwrap();
    for r in report.correct.rows() {
        if let Some(FieldValue::Summary(m)) = r.get("paccioli_amount") {
            total = total.fuse(m).unwrap();
        }
    }
    // Entry 5 lost its credit leg, so the posted ledger is off by the rent debit.
    assert_eq!(total, MonoidElement::paccioli(1900.into(), 1800.into()).unwrap());
    assert_eq!(total.balance(), Some(100.into()));
    assert_eq!(report.errors.len(), 1);
    assert_eq!(report.errors[0].reason, "unposted");
}
