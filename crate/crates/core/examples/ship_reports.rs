//! Runs the ship inventory reports and prints each dashboard.
//!
//! `cargo run --example ship_reports`

use std::path::Path;

use data_accounting::io::load_pipeline;
use data_accounting::pipeline::{conservation_check, render_dashboard, run};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/ship/ship.pipeline.json");
    let (doc, inputs) = load_pipeline(&path, None)?;
    for g in &doc.graphs {
        let out = run(g, &inputs, &doc.spaces)?;
        let verdict = conservation_check(&out.audit);
        print!("{}", render_dashboard(&out.audit, &out.sinks).to_text());
        println!("conservation: {}\n", if verdict.passed { "holds" } else { "VIOLATED" });
        for r in out.sinks["report"].correct.rows() {
            let cells: Vec<String> = r.relevant().iter().map(|(k, v)| format!("{k}={v}")).collect();
            println!("  {}", cells.join("  "));
        }
        println!();
    }
    Ok(())
}
