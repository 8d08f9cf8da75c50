//! Double-entry summaries. One journal entry has a leg with an unknown
//! amount; that leg is held back, so the trial balance is off by exactly the
//! posted leg and the dashboard names the account that is short.

use std::path::Path;

use data_accounting::io::load_pipeline;
use data_accounting::pipeline::{render_dashboard, run};
use data_accounting::{FieldValue, MonoidElement};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/journal/journal.pipeline.json");
    let (doc, inputs) = load_pipeline(&path, None)?;
    let out = run(&doc.graphs[0], &inputs, &doc.spaces)?;
    let mut total = MonoidElement::paccioli(0.into(), 0.into())?;
    for r in out.sinks["report"].correct.rows() {
        if let Some(FieldValue::Summary(p)) = r.get("paccioli_amount") {
            println!("{:<14} {p}", r.get("account").unwrap().to_string());
            total = total.fuse(p)?;
        }
    }
    println!("{:<14} {total}", "total");
    print!("{}", render_dashboard(&out.audit, &out.sinks).to_text());
    Ok(())
}
