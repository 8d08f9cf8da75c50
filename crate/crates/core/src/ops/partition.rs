use std::collections::{BTreeMap, HashSet};

use crate::expr::Predicate;
use crate::relation::{Record, Relation};
use crate::value::FieldValue;

/// Splits a relation into records satisfying `pred` and the rest.
///
/// The predicate is evaluated in three-valued logic; `Unknown` (a comparison
/// against a missing value) lands in `rejected`.
pub fn partition(rel: Relation, pred: &Predicate) -> (Relation, Relation) {
    partition_by(rel, |r| pred.eval(r).holds())
}

/// Partition by an arbitrary total test.
pub fn partition_by<F>(rel: Relation, mut test: F) -> (Relation, Relation)
where
    F: FnMut(&Record) -> bool,
{
    let (schema, rows) = rel.into_parts();
    let (accepted, rejected): (Vec<_>, Vec<_>) = rows.into_iter().partition(|r| test(r));
    (
        Relation::from_records_unchecked(schema.clone(), accepted),
        Relation::from_records_unchecked(schema, rejected),
    )
}

/// Both sides of a membership partition: which rows of each input also
/// occur (by relevant fields) in the other.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MembershipSplit {
    pub left_shared: Relation,
    pub left_only: Relation,
    pub right_shared: Relation,
    pub right_only: Relation,
}

/// Partitions each input on whether an equal row exists in the other.
///
/// Equality is structural over relevant fields, so two missing cells with
/// the same reason compare equal, as in set operations over NULLs.
pub fn membership(left: Relation, right: Relation) -> MembershipSplit {
    let lkeys: HashSet<BTreeMap<String, FieldValue>> =
        left.rows().iter().map(|r| r.relevant().clone()).collect();
    let rkeys: HashSet<BTreeMap<String, FieldValue>> =
        right.rows().iter().map(|r| r.relevant().clone()).collect();
    let (left_shared, left_only) = partition_by(left, |r| rkeys.contains(r.relevant()));
    let (right_shared, right_only) = partition_by(right, |r| lkeys.contains(r.relevant()));
    MembershipSplit {
        left_shared,
        left_only,
        right_shared,
        right_only,
    }
}
