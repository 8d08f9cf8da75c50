//! A lookup against a reference table: misspelled keys and unreferenced
//! products are diverted with a reason instead of disappearing.

use std::path::Path;

use data_accounting::io::load_pipeline;
use data_accounting::pipeline::run;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/lookup/lookup.pipeline.json");
    let (doc, inputs) = load_pipeline(&path, None)?;
    let out = run(&doc.graphs[0], &inputs, &doc.spaces)?;
    let report = &out.sinks["report"];

    println!("valued by product:");
    for r in report.correct.rows() {
        println!("  {} {}", r.get("product").unwrap(), r.get("sum_position_value").unwrap());
    }
    println!("diverted:");
    for e in &report.errors {
        let pid = e.pids().iter().next().unwrap();
        let path: Vec<String> = out.audit.trace(*pid).iter().map(|(s, p)| format!("{s}:{p}")).collect();
        println!("  {:<8} {:<8} via {}", e.reason, e.get("product").unwrap(), path.join(" -> "));
    }
    let mut reached = report.correct.pids();
    for e in &report.errors {
        reached.extend(e.pids().iter().copied());
    }
    println!("{} of {} ingested pids reach the report sink", reached.len(), out.audit.source_pids().len());
    Ok(())
}
