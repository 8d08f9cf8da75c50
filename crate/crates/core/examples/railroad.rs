//! Railroad processing: a partial computation runs on the records it is
//! defined for and diverts the rest onto the error track.

use data_accounting::expr::{Expr, Predicate};
use data_accounting::ops::{fmap, partition, FieldDef};
use data_accounting::relation::{ingest, row};
use data_accounting::{FieldValue, Schema, SemType, Stream};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let usd = |s: &str| FieldValue::quantity(s.parse().unwrap(), "USD");
    let lines = ingest(
        Schema::of(&[("item", SemType::Text), ("price", SemType::Quantity), ("qty", SemType::Integer)]),
        vec![
            row([("item", FieldValue::text("Milk")), ("price", usd("0.90")), ("qty", FieldValue::Integer(10))]),
            row([("item", FieldValue::text("Cat")), ("price", FieldValue::missing("priceless")), ("qty", FieldValue::Integer(1))]),
            row([("item", FieldValue::text("Grain")), ("price", usd("6.0575")), ("qty", FieldValue::Integer(200))]),
        ],
    )?;

    let (priced, unpriced) = partition(lines, &Predicate::present("price"));
    let mut stream = Stream::from(priced);
    stream.divert(unpriced.into_rows(), "priced", "no_price");

    let valued = fmap(stream, &[FieldDef::new("value", Expr::mul(Expr::field("price"), Expr::field("qty")))])?;
    for r in valued.correct.rows() {
        println!("ok     {} {}", r.get("item").unwrap(), r.get("value").unwrap());
    }
    for e in &valued.errors {
        println!("error  {} at {}: {}", e.get("item").unwrap(), e.stage, e.reason);
    }
    println!("pids in: 3, pids out: {}", valued.pids().len());
    Ok(())
}
