use std::collections::{BTreeMap, BTreeSet};

use data_accounting::ops::{
    aggregate, dedup, drill_down, lossless_project, outer_join, partition, rename, strip_tags, tagged_union, untag,
    AggKind, AggSpec, COUNT_FIELD,
};
use data_accounting::ra::random_case;
use data_accounting::space::{identity_space, MeasureSpec};
use data_accounting::{Expr, FieldValue, Pid, Predicate, Relation};
use proptest::prelude::*;

fn relations(seed: u64) -> (Relation, Relation) {
    let mut b = random_case(seed).bases;
    (b.remove("r0").unwrap(), b.remove("r1").unwrap())
}

/// A predicate over the first column: presence, or equality with a value
/// drawn from the relation itself.
fn predicate(rel: &Relation, pick: usize) -> Predicate {
    let col = rel.schema().columns()[0].name.clone();
    match rel.rows().get(pick % rel.len().max(1)) {
        Some(r) if !pick.is_multiple_of(3) => Predicate::Eq(Expr::field(col.clone()), Expr::Const(r.get(&col).unwrap().clone())),
        _ => Predicate::IsPresent(Expr::field(col)),
    }
}

fn pid_multiset(rel: &Relation) -> Vec<Pid> {
    let mut v: Vec<Pid> = rel.rows().iter().flat_map(|r| r.pids().iter().copied()).collect();
    v.sort();
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn partition_is_complete_and_measure_invariant(seed in any::<u64>(), pick in 0usize..100) {
        let (rel, _) = relations(seed);
        let p = predicate(&rel, pick);
        let (acc, rej) = partition(rel.clone(), &p);
        prop_assert_eq!(acc.len() + rej.len(), rel.len());
        prop_assert!(acc.pids().is_disjoint(&rej.pids()));
        let mut both = pid_multiset(&acc);
        both.extend(pid_multiset(&rej));
        both.sort();
        prop_assert_eq!(both, pid_multiset(&rel));

        let schema = rel.schema().clone();
        let mut spaces = vec![identity_space("ids", schema.clone()), MeasureSpec::Count.to_space("n", schema.clone())];
        if schema.column("d").is_some() {
            spaces.push(MeasureSpec::Sum { field: "d".into(), unit: "kg".into() }.to_space("kg", schema.clone()));
        }
        if schema.column("a").is_some() {
            spaces.push(MeasureSpec::Paccioli { field: "a".into() }.to_space("pac", schema.clone()));
        }
        for s in &spaces {
            let whole = s.measure_all(rel.rows()).unwrap();
            let parts = s.fuse(&s.measure_all(acc.rows()).unwrap(), &s.measure_all(rej.rows()).unwrap()).unwrap();
            prop_assert_eq!(whole, parts, "space {}", s.name());
        }
    }

    #[test]
    fn untag_inverts_tagged_union(seed in any::<u64>(), pick in 0usize..100) {
        let (rel, _) = relations(seed);
        let (acc, rej) = partition(rel.clone(), &predicate(&rel, pick));
        let u = tagged_union(acc.clone(), rej.clone(), "u").unwrap();
        prop_assert_eq!(u.len(), rel.len());
        let (l, r) = untag(u.clone()).unwrap();
        prop_assert_eq!(l, acc);
        prop_assert_eq!(r, rej);
        prop_assert_eq!(strip_tags(u).unwrap().triples(), rel.triples());
    }

    #[test]
    fn outer_join_keeps_every_pid(seed in any::<u64>()) {
        let (l, r) = relations(seed);
        let mapping: BTreeMap<String, String> = r.schema().names().map(|n| (n.to_string(), format!("{n}_r"))).collect();
        let r = rename(r, &mapping).unwrap();
        let on: Vec<(String, String)> = l
            .schema()
            .columns()
            .iter()
            .filter_map(|c| {
                let partner = format!("{}_r", c.name);
                r.schema().column(&partner).map(|_| (c.name.clone(), partner))
            })
            .take(1)
            .collect();
        let out = outer_join(l.clone(), r.clone(), &on).unwrap();
        let mut inputs = l.pids();
        inputs.extend(r.pids());
        let mut outputs = out.inner.pids();
        outputs.extend(out.left.pids());
        outputs.extend(out.right.pids());
        prop_assert_eq!(inputs, outputs);
        prop_assert!(out.left.pids().is_disjoint(&out.inner.pids()));
        prop_assert!(out.right.pids().is_disjoint(&out.inner.pids()));

        // Inner size against a nested-loop count.
        let matches = |a: &FieldValue, b: &FieldValue| !a.is_missing() && !b.is_missing() && a == b;
        let expected: usize = l
            .rows()
            .iter()
            .map(|x| r.rows().iter().filter(|y| on.iter().all(|(p, q)| matches(x.get(p).unwrap(), y.get(q).unwrap()))).count())
            .sum();
        prop_assert_eq!(out.inner.len(), expected);
    }

    #[test]
    fn lossless_projection_preserves_triples(seed in any::<u64>(), mask in any::<u8>()) {
        let (rel, _) = relations(seed);
        let names: Vec<String> = rel.schema().names().map(String::from).collect();
        let keep: Vec<&str> = names.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, n)| n.as_str()).collect();
        let projected = lossless_project(rel.clone(), &keep).unwrap();
        prop_assert_eq!(projected.triples(), rel.triples());
        prop_assert_eq!(projected.schema().len(), keep.len());
        let deduped = dedup(projected.clone());
        prop_assert_eq!(deduped.triples(), rel.triples());
        let distinct: BTreeSet<_> = projected.relevant_multiset().into_iter().collect();
        prop_assert_eq!(deduped.len(), distinct.len());
    }

    #[test]
    fn aggregate_drills_down_to_its_inputs(seed in any::<u64>()) {
        let (rel, _) = relations(seed);
        let group: Vec<String> = rel.schema().columns().iter().take(1).map(|c| c.name.clone()).collect();
        let numeric = rel.schema().columns().iter().find(|c| c.ty.is_numeric()).map(|c| c.name.clone());
        let mut specs = vec![AggSpec::new(AggKind::Count, group[0].clone())];
        if let Some(f) = numeric {
            specs.push(AggSpec::new(AggKind::Sum, f));
        }
        let summary = aggregate(rel.clone(), &group, &specs).unwrap();
        prop_assert_eq!(summary.pids(), rel.pids());
        let mut total = 0u64;
        for row in summary.rows() {
            let key: BTreeMap<String, FieldValue> = group.iter().map(|g| (g.clone(), row.get(g).unwrap().clone())).collect();
            let pids = drill_down(&summary, &key).unwrap();
            prop_assert!(row.pids().is_subset(&pids));
            if let Some(FieldValue::Summary(data_accounting::MonoidElement::Count(n))) = row.get(COUNT_FIELD) {
                prop_assert_eq!(*n as usize, row.pids().len());
                total += n;
            }
        }
        prop_assert_eq!(total as usize, rel.len());
    }

    #[test]
    fn rename_round_trips(seed in any::<u64>()) {
        let (rel, _) = relations(seed);
        let there: BTreeMap<String, String> = rel.schema().names().map(|n| (n.to_string(), format!("x_{n}"))).collect();
        let back: BTreeMap<String, String> = there.iter().map(|(a, b)| (b.clone(), a.clone())).collect();
        let out = rename(rename(rel.clone(), &there).unwrap(), &back).unwrap();
        prop_assert_eq!(out, rel);
    }
}

