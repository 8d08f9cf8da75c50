//! Measuring records in data spaces, and the three product constructions.

use data_accounting::relation::{ingest, row};
use data_accounting::space::{disjoint_product, parallel_product, MeasureSpec};
use data_accounting::{FieldValue, Schema, SemType};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let schema = Schema::of(&[("item", SemType::Text), ("weight", SemType::Quantity)]);
    let kg = |n: i64| FieldValue::quantity(n.into(), "kg");
    let cargo = ingest(
        schema.clone(),
        vec![
            row([("item", FieldValue::text("Grain")), ("weight", kg(200_000))]),
            row([("item", FieldValue::text("Milk")), ("weight", kg(5_150))]),
            row([("item", FieldValue::text("Cat")), ("weight", FieldValue::missing("unknown"))]),
        ],
    )?;

    let count = MeasureSpec::Count.to_space("records", schema.clone());
    let weight = MeasureSpec::Sum { field: "weight".into(), unit: "kg".into() }.to_space("weight_kg", schema.clone());
    println!("{}: {}", count.name(), count.measure_all(cargo.rows())?);
    println!("{}: {} (the cat weighs nothing here)", weight.name(), weight.measure_all(cargo.rows())?);

    let both = parallel_product(&count, &weight)?;
    println!("{}: {}", both.name(), both.measure_all(cargo.rows())?);

    let either = disjoint_product(&count, &weight)?;
    println!("{} over {} fields", either.name(), either.schema().len());
    Ok(())
}
