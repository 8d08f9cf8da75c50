use std::collections::BTreeMap;

use serde::Serialize;

use crate::pipeline::{conservation_check, run, SpaceDecl};
use crate::ra::{reference_eval, translate_with, Mutant, RAExpr, RESULT_SINK};
use crate::relation::{ingest_with, PidAllocator, Relation, Schema};
use crate::space::MeasureSpec;
use crate::stream::Stream;
use crate::value::FieldValue;

/// Outcome of comparing a translated pipeline with the reference evaluator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Equivalence {
    pub passed: bool,
    pub first_divergence: Option<String>,
    pub conservation_passed: bool,
}

pub fn equivalence_check(expr: &RAExpr, bases: &BTreeMap<String, Relation>) -> Equivalence {
    equivalence_check_with(expr, bases, Mutant::None)
}

fn fail(msg: String) -> Equivalence {
    Equivalence {
        passed: false,
        first_divergence: Some(msg),
        conservation_passed: false,
    }
}

type Row = BTreeMap<String, FieldValue>;

/// Spaces audited on every generated run: record count, the per-unit sum of
/// the quantity column and the double-entry measure of an integer column.
pub fn fuzz_spaces() -> Vec<SpaceDecl> {
    vec![
        SpaceDecl::new("count", MeasureSpec::Count),
        SpaceDecl::new("d_kg", MeasureSpec::Sum { field: "d".into(), unit: "kg".into() }),
        SpaceDecl::new("d_g", MeasureSpec::Sum { field: "d".into(), unit: "g".into() }),
        SpaceDecl::new("a_paccioli", MeasureSpec::Paccioli { field: "a".into() }),
    ]
}

fn describe(row: &Row) -> String {
    let parts: Vec<String> = row.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!("{{{}}}", parts.join(", "))
}

fn divergence(mut got: Vec<Row>, mut want: Vec<Row>) -> Option<String> {
    got.sort();
    want.sort();
    if got == want {
        return None;
    }
    let (mut i, mut j) = (0, 0);
    while i < got.len() && j < want.len() {
        match got[i].cmp(&want[j]) {
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
            std::cmp::Ordering::Less => {
                return Some(format!("pipeline has extra row {}", describe(&got[i])));
            }
            std::cmp::Ordering::Greater => {
                return Some(format!("pipeline lacks row {}", describe(&want[j])));
            }
        }
    }
    if i < got.len() {
        Some(format!("pipeline has extra row {}", describe(&got[i])))
    } else {
        Some(format!("pipeline lacks row {}", describe(&want[j])))
    }
}

/// Runs the translated pipeline over fresh copies of the base relations and
/// compares its result sink, as a multiset of field maps, with the reference
/// answer. Also audits conservation of the run.
pub fn equivalence_check_with(expr: &RAExpr, bases: &BTreeMap<String, Relation>, mutant: Mutant) -> Equivalence {
    let schemas: BTreeMap<String, Schema> = bases.iter().map(|(k, v)| (k.clone(), v.schema().clone())).collect();
    let want = match reference_eval(expr, bases) {
        Ok(r) => r,
        Err(e) => return fail(format!("reference: {e}")),
    };
    let query = match translate_with(expr, &schemas, mutant) {
        Ok(q) => q,
        Err(e) => return fail(format!("translate: {e}")),
    };
    let mut alloc = PidAllocator::new();
    let mut inputs = BTreeMap::new();
    for (input, base) in &query.occurrences {
        let rel = &bases[base];
        let rows = rel.rows().iter().map(|r| r.relevant().clone()).collect();
        match ingest_with(&mut alloc, rel.schema().clone(), rows) {
            Ok(r) => {
                inputs.insert(input.clone(), Stream::from(r));
            }
            Err(e) => return fail(format!("ingest {input}: {e}")),
        }
    }
    let out = match run(&query.graph, &inputs, &fuzz_spaces()) {
        Ok(o) => o,
        Err(e) => return fail(format!("run: {e}")),
    };
    let got = out.sinks[RESULT_SINK].correct.relevant_multiset();
    let first_divergence = divergence(got, want.relevant_multiset());
    let verdict = conservation_check(&out.audit);
    Equivalence {
        passed: first_divergence.is_none(),
        first_divergence,
        conservation_passed: verdict.passed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relation::{ingest, row, SemType};

    fn bases() -> BTreeMap<String, Relation> {
        let a = ingest(
            Schema::of(&[("k", SemType::Integer), ("x", SemType::Text)]),
            vec![
                row([("k", FieldValue::Integer(1)), ("x", FieldValue::text("a"))]),
                row([("k", FieldValue::Integer(1)), ("x", FieldValue::text("a"))]),
                row([("k", FieldValue::Integer(2)), ("x", FieldValue::text("b"))]),
            ],
        )
        .unwrap();
        BTreeMap::from([("a".to_string(), a)])
    }

    fn self_union() -> RAExpr {
        RAExpr::Union {
            left: Box::new(RAExpr::base("a")),
            right: Box::new(RAExpr::base("a")),
        }
    }

    #[test]
    fn union_matches_reference() {
        let e = equivalence_check(&self_union(), &bases());
        assert!(e.passed, "{:?}", e.first_divergence);
        assert!(e.conservation_passed);
    }

    #[test]
    fn mutant_is_caught() {
        let e = equivalence_check_with(&self_union(), &bases(), Mutant::UnionWithoutDedup);
        assert!(!e.passed);
        assert!(e.first_divergence.unwrap().contains("extra row"));
    }
}
