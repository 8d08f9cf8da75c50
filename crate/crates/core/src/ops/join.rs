use std::collections::HashMap;

use crate::decimal::Decimal;
use crate::monoid::MonoidElement;
use crate::ops::OpError;
use crate::relation::{Column, Record, Relation, Schema};
use crate::value::FieldValue;

/// The three outputs of an outer join: unmatched left rows, joined rows,
/// unmatched right rows. Every input pid lands in at least one of them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinOutput {
    pub left: Relation,
    pub inner: Relation,
    pub right: Relation,
}

/// Join key normalised so that equal values hash equally: an integer and a
/// decimal with the same amount are the same key.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum JoinKey {
    Amount(Decimal, String),
    Text(String),
    Summary(MonoidElement),
}

impl JoinKey {
    /// `None` for missing values, which never join.
    pub fn of(v: &FieldValue) -> Option<JoinKey> {
        match v {
            FieldValue::Missing(_) => None,
            FieldValue::Text(s) => Some(JoinKey::Text(s.clone())),
            FieldValue::Summary(m) => Some(JoinKey::Summary(m.clone())),
            other => other
                .as_amount()
                .map(|(d, u)| JoinKey::Amount(d, u.to_string())),
        }
    }
}

fn key(r: &Record, fields: &[&str]) -> Option<Vec<JoinKey>> {
    fields
        .iter()
        .map(|f| r.get(f).and_then(JoinKey::of))
        .collect()
}

/// Schema of the joined rows: left columns followed by right columns. A right
/// key column with the same name as its left partner is folded into it; any
/// other shared name is an error.
pub fn join_schema(left: &Schema, right: &Schema, on: &[(String, String)]) -> Result<Schema, OpError> {
    for (l, r) in on {
        if !left.contains(l) {
            return Err(OpError::JoinColumnMissing(l.clone()));
        }
        if !right.contains(r) {
            return Err(OpError::JoinColumnMissing(r.clone()));
        }
    }
    let mut cols: Vec<Column> = left.columns().to_vec();
    for c in right.columns() {
        if left.contains(&c.name) {
            if on.iter().any(|(l, r)| l == &c.name && r == &c.name) {
                continue;
            }
            return Err(OpError::FieldCollision(c.name.clone()));
        }
        cols.push(c.clone());
    }
    Ok(Schema::new(cols)?)
}

fn merge(l: &Record, r: &Record) -> Record {
    let mut relevant = l.relevant().clone();
    for (k, v) in r.relevant() {
        relevant.entry(k.clone()).or_insert_with(|| v.clone());
    }
    let mut pids = l.pids().clone();
    pids.extend(r.pids().iter().copied());
    let mut out = Record::derived(pids, relevant);
    out.irrelevant_mut().extend(l.irrelevant().iter().cloned());
    out.irrelevant_mut().extend(r.irrelevant().iter().cloned());
    for t in l.tags().iter().chain(r.tags()) {
        out.push_tag(t.clone());
    }
    out
}

/// Three-way outer join on equality of the paired columns.
///
/// Rows with a missing value in any key column never match. An empty `on`
/// list matches every pair, which is the lossless form of a cartesian
/// product: if either side is empty the other side comes out unmatched.
pub fn outer_join(left: Relation, right: Relation, on: &[(String, String)]) -> Result<JoinOutput, OpError> {
    let schema = join_schema(left.schema(), right.schema(), on)?;
    let lf: Vec<&str> = on.iter().map(|(l, _)| l.as_str()).collect();
    let rf: Vec<&str> = on.iter().map(|(_, r)| r.as_str()).collect();

    let mut index: HashMap<Vec<JoinKey>, Vec<usize>> = HashMap::new();
    for (i, r) in right.rows().iter().enumerate() {
        if let Some(k) = key(r, &rf) {
            index.entry(k).or_default().push(i);
        }
    }
    let mut right_matched = vec![false; right.len()];
    let mut inner = Vec::new();
    let mut left_only = Vec::new();
    for l in left.rows() {
        let hits = key(l, &lf).and_then(|k| index.get(&k));
        match hits {
            Some(hits) if !hits.is_empty() => {
                for &i in hits {
                    right_matched[i] = true;
                    inner.push(merge(l, &right.rows()[i]));
                }
            }
            _ => left_only.push(l.clone()),
        }
    }
    let (lschema, _) = left.into_parts();
    let (rschema, rrows) = right.into_parts();
    let right_only = rrows
        .into_iter()
        .zip(right_matched)
        .filter_map(|(r, m)| (!m).then_some(r))
        .collect();
    Ok(JoinOutput {
        left: Relation::from_records_unchecked(lschema, left_only),
        inner: Relation::from_records_unchecked(schema, inner),
        right: Relation::from_records_unchecked(rschema, right_only),
    })
}

/// All pairs of rows, each carrying the union of both pid sets.
///
/// As a standalone function this is not lossless when one side is empty;
/// pipelines use [`outer_join`] with no key columns instead.
pub fn cartesian(left: Relation, right: Relation) -> Result<Relation, OpError> {
    Ok(outer_join(left, right, &[])?.inner)
}
