use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::ops::OpError;
use crate::relation::{Column, Detail, PathTag, Record, Relation, Schema};
use crate::value::FieldValue;

/// Keeps `keep` as relevant fields and moves every other field into an
/// irrelevant detail row that remembers which pids it came from.
///
/// The `(field, value, pid)` triples of the input and output are identical.
pub fn lossless_project(rel: Relation, keep: &[&str]) -> Result<Relation, OpError> {
    let kept: BTreeSet<&str> = keep.iter().copied().collect();
    for k in &kept {
        if !rel.schema().contains(k) {
            return Err(OpError::UnknownField(k.to_string()));
        }
    }
    let (schema, rows) = rel.into_parts();
    let out_schema = schema.restricted(&kept);
    let rows = rows
        .into_iter()
        .map(|mut r| {
            let (stay, moved): (BTreeMap<_, _>, BTreeMap<_, _>) = std::mem::take(r.relevant_mut())
                .into_iter()
                .partition(|(k, _)| kept.contains(k.as_str()));
            *r.relevant_mut() = stay;
            if !moved.is_empty() {
                let pids = r.pids().clone();
                r.irrelevant_mut().push(Detail { pids, fields: moved });
            }
            r
        })
        .collect();
    Ok(Relation::from_records_unchecked(out_schema, rows))
}

/// Merges records whose relevant fields (and path tags) coincide. The
/// survivor carries the union of pids and all irrelevant detail rows, so the
/// duplicates remain reachable. Order of first occurrence is kept.
pub fn dedup(rel: Relation) -> Relation {
    let (schema, rows) = rel.into_parts();
    let mut slot: HashMap<(BTreeMap<String, FieldValue>, Vec<PathTag>), usize> = HashMap::new();
    let mut out: Vec<Record> = Vec::new();
    for r in rows {
        let k = (r.relevant().clone(), r.tags().to_vec());
        match slot.get(&k) {
            Some(&i) => {
                let kept = &mut out[i];
                kept.pids_mut().extend(r.pids().iter().copied());
                kept.irrelevant_mut().extend(r.irrelevant().iter().cloned());
            }
            None => {
                slot.insert(k, out.len());
                out.push(r);
            }
        }
    }
    Relation::from_records_unchecked(schema, out)
}

/// Output schema of [`rename`].
pub fn rename_schema(schema: &Schema, mapping: &BTreeMap<String, String>) -> Result<Schema, OpError> {
    for from in mapping.keys() {
        if !schema.contains(from) {
            return Err(OpError::UnknownField(from.clone()));
        }
    }
    let mut seen = BTreeSet::new();
    let mut cols = Vec::with_capacity(schema.len());
    for c in schema.columns() {
        let name = mapping.get(&c.name).unwrap_or(&c.name).clone();
        if !seen.insert(name.clone()) {
            return Err(OpError::CollisionAfterRename(name));
        }
        cols.push(Column { name, ..c.clone() });
    }
    Ok(Schema::new(cols)?)
}

/// Renames relevant fields. The mapping must be injective on the result.
pub fn rename(rel: Relation, mapping: &BTreeMap<String, String>) -> Result<Relation, OpError> {
    let out_schema = rename_schema(rel.schema(), mapping)?;
    let rows = rel
        .into_rows()
        .into_iter()
        .map(|mut r| {
            let fields = std::mem::take(r.relevant_mut());
            *r.relevant_mut() = fields
                .into_iter()
                .map(|(k, v)| (mapping.get(&k).cloned().unwrap_or(k), v))
                .collect();
            r
        })
        .collect();
    Ok(Relation::from_records_unchecked(out_schema, rows))
}
