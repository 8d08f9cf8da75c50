//! Projection keeps dropped fields as irrelevant details, so the
//! (field, value, pid) triples of a relation survive projection and dedup.

use data_accounting::ops::{dedup, lossless_project};
use data_accounting::relation::{ingest, row};
use data_accounting::{FieldValue, Schema, SemType};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let orders = ingest(
        Schema::of(&[("customer", SemType::Text), ("order_id", SemType::Integer)]),
        vec![
            row([("customer", FieldValue::text("acme")), ("order_id", FieldValue::Integer(1001))]),
            row([("customer", FieldValue::text("acme")), ("order_id", FieldValue::Integer(1003))]),
            row([("customer", FieldValue::text("zenith")), ("order_id", FieldValue::Integer(1002))]),
        ],
    )?;
    let customers = dedup(lossless_project(orders.clone(), &["customer"])?);
    for r in customers.rows() {
        let hidden: Vec<String> = r.irrelevant().iter().map(|d| format!("{d:?}")).collect();
        println!("{} pids {:?}", r.get("customer").unwrap(), r.pids());
        println!("    details {}", hidden.join(", "));
    }
    println!("{} rows became {}", orders.len(), customers.len());
    println!("triples preserved: {}", customers.triples() == orders.triples());
    Ok(())
}
