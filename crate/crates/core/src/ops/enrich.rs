use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::expr::Expr;
use crate::ops::OpError;
use crate::relation::{Column, Record, Relation, Schema, SemType};
use crate::stream::{ErrorRecord, Stream, ERROR_REASON, ERROR_STAGE};
use crate::value::FieldValue;

/// A computed field: `name := expr`, optionally with a declared type and unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldDef {
    pub name: String,
    pub expr: Expr,
    #[serde(default, rename = "type", skip_serializing_if = "Option::is_none")]
    pub ty: Option<SemType>,
}

impl FieldDef {
    pub fn new(name: impl Into<String>, expr: Expr) -> Self {
        FieldDef {
            name: name.into(),
            expr,
            ty: None,
        }
    }
}

/// Output schema of [`fmap`]. Later definitions may refer to earlier ones.
pub fn fmap_schema(schema: &Schema, defs: &[FieldDef]) -> Result<Schema, OpError> {
    let mut out = schema.clone();
    for d in defs {
        if out.contains(&d.name) {
            return Err(OpError::FieldCollision(d.name.clone()));
        }
        let inferred = d.expr.infer(&out).map_err(OpError::Type)?;
        let ty = d.ty.unwrap_or(inferred);
        out = out.extended([Column::new(d.name.clone(), ty)])?;
    }
    Ok(out)
}

/// Extends every correct record with computed fields. Never removes or
/// overwrites a field; the error track passes through untouched.
pub fn fmap(stream: Stream, defs: &[FieldDef]) -> Result<Stream, OpError> {
    let out = fmap_schema(stream.correct.schema(), defs)?;
    let new_cols = out.columns()[stream.correct.schema().len()..].to_vec();
    fmap_with(stream, new_cols, |r| {
        let mut scratch = r.relevant().clone();
        let mut added = BTreeMap::new();
        for d in defs {
            let v = d.expr.eval(&scratch);
            scratch.insert(d.name.clone(), v.clone());
            added.insert(d.name.clone(), v);
        }
        added
    })
}

/// Extends correct records with the fields returned by `f`, which must be
/// exactly `new_columns`, each value admissible for its column.
pub fn fmap_with<F>(stream: Stream, new_columns: Vec<Column>, f: F) -> Result<Stream, OpError>
where
    F: Fn(&Record) -> BTreeMap<String, FieldValue>,
{
    let Stream { correct, errors } = stream;
    for c in &new_columns {
        if correct.schema().contains(&c.name) {
            return Err(OpError::FieldCollision(c.name.clone()));
        }
    }
    let schema = correct.schema().extended(new_columns.iter().cloned())?;
    let rows = correct
        .into_rows()
        .into_iter()
        .map(|mut r| {
            let mut added = f(&r);
            for c in &new_columns {
                let v = added
                    .remove(&c.name)
                    .ok_or_else(|| OpError::FnNotTotal(c.name.clone()))?;
                if matches!(&v, FieldValue::Missing(reason) if reason.is_empty()) {
                    return Err(OpError::FnNotTotal(c.name.clone()));
                }
                if !c.ty.admits(&v) {
                    return Err(OpError::Type(format!("`{}` of type {} got {v}", c.name, c.ty)));
                }
                r.relevant_mut().insert(c.name.clone(), v);
            }
            if let Some(extra) = added.into_keys().next() {
                return Err(OpError::FieldCollision(extra));
            }
            Ok(r)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Stream::new(Relation::from_records_unchecked(schema, rows), errors))
}

fn forbidden(e: &ErrorRecord, name: &str) -> bool {
    name == ERROR_STAGE
        || name == ERROR_REASON
        || e.record.get(name).is_some()
        || e.record.irrelevant().iter().any(|d| d.fields.contains_key(name))
}

/// Annotates error records with computed fields. The frozen business fields
/// and the stage/reason stamp cannot be written.
pub fn emap(stream: Stream, defs: &[FieldDef]) -> Result<Stream, OpError> {
    emap_with(stream, |e| {
        defs.iter()
            .map(|d| (d.name.clone(), d.expr.eval(e)))
            .collect()
    })
}

/// [`emap`] with an arbitrary annotation function.
pub fn emap_with<F>(stream: Stream, f: F) -> Result<Stream, OpError>
where
    F: Fn(&ErrorRecord) -> BTreeMap<String, FieldValue>,
{
    let Stream { correct, errors } = stream;
    let errors = errors
        .into_iter()
        .map(|mut e| {
            for (k, v) in f(&e) {
                if forbidden(&e, &k) || correct.schema().contains(&k) {
                    return Err(OpError::ForbiddenFieldWrite(k));
                }
                e.annotations.insert(k, v);
            }
            Ok(e)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Stream::new(correct, errors))
}

/// Result of a totalized partial function. `Defined` is the right injection
/// (the function applied), `Passthrough` the left one (the record as it was).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Totalized<T> {
    Defined(T),
    Passthrough(Record),
}

/// Makes a partial function total by routing records outside `domain` to
/// `Passthrough`. If `f` fails on a record the domain admits, the domain
/// predicate is wrong and [`OpError::DomainPredUnsound`] is returned.
pub fn totalize<T, F, D>(f: F, domain: D) -> impl Fn(Record) -> Result<Totalized<T>, OpError>
where
    F: Fn(&Record) -> Option<T>,
    D: Fn(&Record) -> bool,
{
    move |r| {
        if !domain(&r) {
            return Ok(Totalized::Passthrough(r));
        }
        f(&r)
            .map(Totalized::Defined)
            .ok_or_else(|| OpError::DomainPredUnsound(r.pids().iter().copied().collect()))
    }
}
