//! Fusing summaries of each kind, and the two orders on them.

use data_accounting::monoid::{InformationMonoid, MonoidError};
use data_accounting::{FieldValue, MonoidElement, MonoidKind};

fn main() -> Result<(), MonoidError> {
    let d = |s: &str| s.parse().unwrap();

    let totals = InformationMonoid::new(MonoidKind::Sum("kg".into()));
    let parts = [MonoidElement::sum("kg", d("12.5")), MonoidElement::sum("kg", d("7.5"))];
    let whole = totals.fold(parts.iter())?;
    println!("sum: {} + {} = {whole}", parts[0], parts[1]);
    println!("  part grows into whole: {}", totals.leq(&parts[0], &whole)?);

    // A signed sum can shrink, so fusion is no lower bound: no derived order.
    match InformationMonoid::derived(MonoidKind::Sum("kg".into())) {
        Err(e) => println!("  derived order: {e}"),
        Ok(_) => unreachable!(),
    }

    let cheapest = InformationMonoid::derived(MonoidKind::Min("USD".into()))?;
    let a = MonoidElement::min("USD", d("4.50"));
    let b = MonoidElement::min("USD", d("0.90"));
    let m = cheapest.fuse(&a, &b)?;
    println!("min: {a} with {b} = {m}, below both: {}", cheapest.leq(&m, &a)? && cheapest.leq(&m, &b)?);
    println!("  identity: {}", MonoidKind::Min("USD".into()).unit());

    let mean = MonoidElement::avg("USD", d("9"), 3)?.fuse(&MonoidElement::avg("USD", d("1"), 1)?)?;
    println!("avg: {mean}, mean {}", mean.mean().unwrap());

    let ids = MonoidElement::ids([1001i64, 1003].map(FieldValue::Integer))
        .fuse(&MonoidElement::ids([1003i64, 1007].map(FieldValue::Integer)))?;
    println!("ids: {ids}");

    let books = MonoidElement::from_signed(d("500")).fuse(&MonoidElement::from_signed(d("-500")))?;
    println!("paccioli: {books}, balance {}", books.balance().unwrap());

    let pair = MonoidElement::Tuple(vec![MonoidElement::Count(2), MonoidElement::sum("kg", d("3"))]);
    println!("tuple: {}", pair.fuse(&pair)?);
    Ok(())
}
