//! Textbook multiset evaluation by direct enumeration. Shares only the
//! scalar expression evaluator with the engine.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use crate::decimal::Decimal;
use crate::expr::value_cmp;
use crate::monoid::{MonoidElement, MonoidKind};
use crate::ops::{AggKind, AggSpec, COUNT_FIELD};
use crate::ra::{common_fields, RAExpr, TypeError};
use crate::relation::{Record, Relation, Schema, SemType};
use crate::value::FieldValue;

type Row = BTreeMap<String, FieldValue>;

fn joins(a: &FieldValue, b: &FieldValue) -> bool {
    !a.is_missing() && !b.is_missing() && value_cmp(a, b) == Some(Ordering::Equal)
}

fn same_group(a: Option<&FieldValue>, b: Option<&FieldValue>) -> bool {
    match (a, b) {
        (Some(FieldValue::Missing(x)), Some(FieldValue::Missing(y))) => x == y,
        (Some(x), Some(y)) => joins(x, y),
        (None, None) => true,
        _ => false,
    }
}

fn distinct(rows: Vec<Row>) -> Vec<Row> {
    let mut out: Vec<Row> = Vec::new();
    for r in rows {
        if !out.contains(&r) {
            out.push(r);
        }
    }
    out
}

fn pad(mut row: Row, schema: &Schema) -> Row {
    for c in schema.columns() {
        row.entry(c.name.clone())
            .or_insert_with(|| FieldValue::missing("null"));
    }
    row
}

/// Evaluates `expr` over named base relations with multiset semantics
/// (set semantics for union, difference and intersection).
pub fn reference_eval(expr: &RAExpr, inputs: &BTreeMap<String, Relation>) -> Result<Relation, TypeError> {
    let bases: BTreeMap<String, Schema> = inputs.iter().map(|(k, v)| (k.clone(), v.schema().clone())).collect();
    let schema = expr.typecheck(&bases)?;
    let rows = eval(expr, inputs, &bases);
    let records = rows.into_iter().map(|r| Record::derived(BTreeSet::new(), r)).collect();
    Relation::from_records(schema, records).map_err(|e| TypeError {
        path: expr.kind().to_string(),
        detail: e.to_string(),
    })
}

fn schema_of(e: &RAExpr, bases: &BTreeMap<String, Schema>) -> Schema {
    e.typecheck(bases).expect("checked at the root")
}

fn eval(e: &RAExpr, inputs: &BTreeMap<String, Relation>, bases: &BTreeMap<String, Schema>) -> Vec<Row> {
    let ev = |x: &RAExpr| eval(x, inputs, bases);
    match e {
        RAExpr::Base { name } => inputs[name].rows().iter().map(|r| r.relevant().clone()).collect(),
        RAExpr::Project { fields, input } => ev(input)
            .into_iter()
            .map(|r| fields.iter().map(|f| (f.clone(), r[f].clone())).collect())
            .collect(),
        RAExpr::Select { predicate, input } => ev(input)
            .into_iter()
            .filter(|r| predicate.eval(r).holds())
            .collect(),
        RAExpr::Rename { mapping, input } => ev(input)
            .into_iter()
            .map(|r| {
                r.into_iter()
                    .map(|(k, v)| (mapping.get(&k).cloned().unwrap_or(k), v))
                    .collect()
            })
            .collect(),
        RAExpr::CrossProduct { left, right } => {
            let (l, r) = (ev(left), ev(right));
            let mut out = Vec::new();
            for a in &l {
                for b in &r {
                    let mut row = a.clone();
                    row.extend(b.clone());
                    out.push(row);
                }
            }
            out
        }
        RAExpr::NaturalJoin { left, right } => {
            let common = common_fields(&schema_of(left, bases), &schema_of(right, bases));
            let (l, r) = (ev(left), ev(right));
            let mut out = Vec::new();
            for a in &l {
                for b in &r {
                    if common.iter().all(|(c, _)| joins(&a[c], &b[c])) {
                        let mut row = a.clone();
                        for (k, v) in b {
                            row.entry(k.clone()).or_insert_with(|| v.clone());
                        }
                        out.push(row);
                    }
                }
            }
            out
        }
        RAExpr::OuterJoin { on, left, right } => {
            let schema = schema_of(e, bases);
            let (l, r) = (ev(left), ev(right));
            let mut out = Vec::new();
            let mut right_hit = vec![false; r.len()];
            let mut left_unmatched = Vec::new();
            for a in &l {
                let mut hit = false;
                for (j, b) in r.iter().enumerate() {
                    if on.iter().all(|(x, y)| joins(&a[x], &b[y])) {
                        hit = true;
                        right_hit[j] = true;
                        let mut row = a.clone();
                        for (k, v) in b {
                            row.entry(k.clone()).or_insert_with(|| v.clone());
                        }
                        out.push(row);
                    }
                }
                if !hit {
                    left_unmatched.push(pad(a.clone(), &schema));
                }
            }
            out.extend(left_unmatched);
            for (b, hit) in r.into_iter().zip(right_hit) {
                if !hit {
                    out.push(pad(b, &schema));
                }
            }
            out
        }
        RAExpr::Union { left, right } => {
            let mut rows = ev(left);
            rows.extend(ev(right));
            distinct(rows)
        }
        RAExpr::UnionAll { left, right } => {
            let mut rows = ev(left);
            rows.extend(ev(right));
            rows
        }
        RAExpr::Minus { left, right } => {
            let r = ev(right);
            distinct(ev(left)).into_iter().filter(|x| !r.contains(x)).collect()
        }
        RAExpr::Intersect { left, right } => {
            let r = ev(right);
            distinct(ev(left)).into_iter().filter(|x| r.contains(x)).collect()
        }
        RAExpr::Aggregate { group_by, specs, input } => aggregate(&schema_of(input, bases), group_by, specs, ev(input)),
        RAExpr::Map { fields, input } => ev(input)
            .into_iter()
            .map(|mut r| {
                for d in fields {
                    let v = d.expr.eval(&r);
                    r.insert(d.name.clone(), v);
                }
                r
            })
            .collect(),
    }
}

fn by_unit(spec: &AggSpec, schema: &Schema) -> bool {
    let numeric = matches!(
        spec.kind,
        AggKind::Sum | AggKind::Min | AggKind::Max | AggKind::Avg | AggKind::Paccioli
    );
    numeric && schema.column(&spec.field).map(|c| c.ty) == Some(SemType::Quantity)
}

fn unit_label(schema: &Schema, field: &str, v: &FieldValue) -> Option<String> {
    match v.as_amount() {
        Some((_, u)) => Some(u.to_string()),
        None => schema.column(field).and_then(|c| c.unit.clone()),
    }
}

fn aggregate(schema: &Schema, group_by: &[String], specs: &[AggSpec], rows: Vec<Row>) -> Vec<Row> {
    struct G {
        members: Vec<Row>,
        units: Vec<Option<String>>,
    }
    let mut groups: Vec<G> = Vec::new();
    for r in rows {
        let units: Vec<Option<String>> = specs
            .iter()
            .filter(|s| by_unit(s, schema))
            .map(|s| unit_label(schema, &s.field, &r[&s.field]))
            .collect();
        let found = groups.iter_mut().find(|g| {
            g.units == units
                && group_by
                    .iter()
                    .all(|k| same_group(g.members[0].get(k), r.get(k)))
        });
        match found {
            Some(g) => g.members.push(r),
            None => groups.push(G {
                members: vec![r],
                units,
            }),
        }
    }
    if groups.is_empty() && group_by.is_empty() {
        let mut row = Row::new();
        for s in specs {
            let unit = schema.column(&s.field).and_then(|c| c.unit.clone()).unwrap_or_default();
            row.insert(s.output_name(), FieldValue::Summary(empty_of(s.kind, &unit)));
        }
        row.insert(COUNT_FIELD.into(), FieldValue::Summary(MonoidElement::Count(0)));
        return vec![row];
    }
    groups
        .into_iter()
        .map(|g| {
            let mut row = Row::new();
            for k in group_by {
                row.insert(k.clone(), g.members[0][k].clone());
            }
            for s in specs {
                let first = &g.members[0][&s.field];
                let unit = unit_label(schema, &s.field, first).unwrap_or_default();
                let values: Vec<&FieldValue> = g
                    .members
                    .iter()
                    .map(|m| &m[&s.field])
                    .filter(|v| !v.is_missing())
                    .collect();
                row.insert(s.output_name(), FieldValue::Summary(fold(s.kind, &unit, &values)));
            }
            row.insert(
                COUNT_FIELD.into(),
                FieldValue::Summary(MonoidElement::Count(g.members.len() as u64)),
            );
            row
        })
        .collect()
}

fn empty_of(kind: AggKind, unit: &str) -> MonoidElement {
    match kind {
        AggKind::Count => MonoidKind::Count.unit(),
        AggKind::Sum => MonoidKind::Sum(unit.into()).unit(),
        AggKind::Min => MonoidKind::Min(unit.into()).unit(),
        AggKind::Max => MonoidKind::Max(unit.into()).unit(),
        AggKind::Avg => MonoidKind::Avg(unit.into()).unit(),
        AggKind::SetOfIds => MonoidKind::SetOfIds.unit(),
        AggKind::Paccioli => MonoidKind::Paccioli.unit(),
    }
}

fn fold(kind: AggKind, unit: &str, values: &[&FieldValue]) -> MonoidElement {
    if values.is_empty() {
        return empty_of(kind, unit);
    }
    let amounts: Vec<Decimal> = values.iter().filter_map(|v| v.as_amount().map(|(d, _)| d)).collect();
    match kind {
        AggKind::Count => MonoidElement::Count(values.len() as u64),
        AggKind::SetOfIds => MonoidElement::ids(values.iter().map(|v| (*v).clone())),
        AggKind::Sum => MonoidElement::sum(unit, amounts.iter().copied().sum()),
        AggKind::Min => MonoidElement::min(unit, *amounts.iter().min().expect("nonempty")),
        AggKind::Max => MonoidElement::max(unit, *amounts.iter().max().expect("nonempty")),
        AggKind::Avg => MonoidElement::avg(unit, amounts.iter().copied().sum(), amounts.len() as u64)
            .expect("non-negative count"),
        AggKind::Paccioli => {
            let debit: Decimal = amounts.iter().filter(|d| !d.is_negative()).copied().sum();
            let credit: Decimal = amounts.iter().filter(|d| d.is_negative()).map(|d| -*d).sum();
            MonoidElement::paccioli(debit, credit).expect("both sides non-negative")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relation::{ingest, row};

    fn rel(rows: &[(i64, &str)]) -> Relation {
        ingest(
            Schema::of(&[("k", SemType::Integer), ("x", SemType::Text)]),
            rows.iter()
                .map(|(k, x)| row([("k", FieldValue::Integer(*k)), ("x", FieldValue::text(*x))]))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn cross_product_cardinality() {
        let a = rel(&[(1, "a"), (2, "b"), (2, "c")]);
        let b = Relation::from_records(
            Schema::of(&[("y", SemType::Integer)]),
            vec![
                Record::derived(BTreeSet::new(), row([("y", 1i64)])),
                Record::derived(BTreeSet::new(), row([("y", 2i64)])),
            ],
        )
        .unwrap();
        let inputs = BTreeMap::from([("a".to_string(), a), ("b".to_string(), b)]);
        let e = RAExpr::CrossProduct {
            left: Box::new(RAExpr::base("a")),
            right: Box::new(RAExpr::base("b")),
        };
        assert_eq!(reference_eval(&e, &inputs).unwrap().len(), 6);
    }

    #[test]
    fn union_with_itself_is_distinct() {
        let a = rel(&[(1, "a"), (1, "a"), (2, "b")]);
        let inputs = BTreeMap::from([("a".to_string(), a)]);
        let e = RAExpr::Union {
            left: Box::new(RAExpr::base("a")),
            right: Box::new(RAExpr::base("a")),
        };
        assert_eq!(reference_eval(&e, &inputs).unwrap().len(), 2);
    }

    #[test]
    fn outer_join_pads_unmatched() {
        let a = rel(&[(1, "a"), (3, "c")]);
        let b = ingest(
            Schema::of(&[("j", SemType::Integer)]),
            vec![row([("j", 1i64)]), row([("j", 7i64)])],
        )
        .unwrap();
        let inputs = BTreeMap::from([("a".to_string(), a), ("b".to_string(), b)]);
        let e = RAExpr::OuterJoin {
            on: vec![("k".into(), "j".into())],
            left: Box::new(RAExpr::base("a")),
            right: Box::new(RAExpr::base("b")),
        };
        let out = reference_eval(&e, &inputs).unwrap();
        assert_eq!(out.len(), 3);
        assert!(out
            .rows()
            .iter()
            .any(|r| r.get("j") == Some(&FieldValue::missing("null")) && r.get("k") == Some(&FieldValue::Integer(3))));
    }
}
