//! Records, relations and provenance.
//!
//! A [`Record`] keeps the fields that still matter for the output
//! (`relevant`) next to a subrelation of fields that were projected away
//! (`irrelevant`). Neither is ever dropped. Every record also carries the
//! set of provenance ids it was derived from and a stack of [`PathTag`]s
//! recording which side of a tagged union it came through.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::value::{FieldValue, Pid};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RelationError {
    #[error("row {row}: {detail}")]
    SchemaMismatch { row: usize, detail: String },
    #[error("unknown field `{0}`")]
    UnknownField(String),
    #[error("duplicate field `{0}` in schema")]
    DuplicateField(String),
    #[error("unknown provenance id {0}")]
    UnknownPid(Pid),
}

/// Declared semantic type of a column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SemType {
    Integer,
    Decimal,
    Text,
    Quantity,
    Summary,
    Any,
}

impl SemType {
    /// Whether a value may live in a column of this type. Missing fits anywhere.
    pub fn admits(self, v: &FieldValue) -> bool {
        matches!(
            (self, v),
            (_, FieldValue::Missing(_))
                | (SemType::Any, _)
                | (SemType::Integer, FieldValue::Integer(_))
                | (SemType::Decimal, FieldValue::Decimal(_) | FieldValue::Integer(_))
                | (SemType::Text, FieldValue::Text(_))
                | (SemType::Quantity, FieldValue::Quantity { .. })
                | (SemType::Summary, FieldValue::Summary(_))
        )
    }

    pub fn is_numeric(self) -> bool {
        matches!(self, SemType::Integer | SemType::Decimal | SemType::Quantity)
    }
}

impl fmt::Display for SemType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SemType::Integer => "integer",
            SemType::Decimal => "decimal",
            SemType::Text => "text",
            SemType::Quantity => "quantity",
            SemType::Summary => "summary",
            SemType::Any => "any",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: SemType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
}

impl Column {
    pub fn new(name: impl Into<String>, ty: SemType) -> Self {
        Column {
            name: name.into(),
            ty,
            unit: None,
        }
    }

    pub fn with_unit(mut self, unit: impl Into<String>) -> Self {
        self.unit = Some(unit.into());
        self
    }
}

/// Ordered column list. Column names are unique.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Schema {
    columns: Vec<Column>,
}

impl Schema {
    pub fn new(columns: Vec<Column>) -> Result<Self, RelationError> {
        let mut seen = BTreeSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(RelationError::DuplicateField(c.name.clone()));
            }
        }
        Ok(Schema { columns })
    }

    /// Convenience constructor from `(name, type)` pairs.
    pub fn of(cols: &[(&str, SemType)]) -> Self {
        Schema::new(cols.iter().map(|(n, t)| Column::new(*n, *t)).collect())
            .expect("duplicate column in Schema::of")
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }

    pub fn field_set(&self) -> BTreeSet<&str> {
        self.names().collect()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.columns.iter().any(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    /// Same names with the same types, in any order.
    pub fn same_fields(&self, other: &Schema) -> bool {
        self.len() == other.len()
            && self
                .columns
                .iter()
                .all(|c| other.column(&c.name).is_some_and(|o| o.ty == c.ty))
    }

    pub fn require(&self, name: &str) -> Result<&Column, RelationError> {
        self.column(name)
            .ok_or_else(|| RelationError::UnknownField(name.to_string()))
    }

    /// This schema followed by `extra` columns.
    pub fn extended<I: IntoIterator<Item = Column>>(&self, extra: I) -> Result<Schema, RelationError> {
        let mut cols = self.columns.clone();
        cols.extend(extra);
        Schema::new(cols)
    }

    /// Keeps only the named columns, in this schema's order.
    pub fn restricted(&self, keep: &BTreeSet<&str>) -> Schema {
        Schema {
            columns: self
                .columns
                .iter()
                .filter(|c| keep.contains(c.name.as_str()))
                .cloned()
                .collect(),
        }
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, c) in self.columns.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}: {}", c.name, c.ty)?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Inl,
    Inr,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Inl => "inl",
            Side::Inr => "inr",
        })
    }
}

/// Marks the side of a tagged union a record passed through, and where.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PathTag {
    pub side: Side,
    pub label: String,
}

impl PathTag {
    pub fn new(side: Side, label: impl Into<String>) -> Self {
        PathTag {
            side,
            label: label.into(),
        }
    }
}

/// One row of a record's irrelevant subrelation, with the provenance of the
/// record it was projected out of.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Detail {
    pub pids: BTreeSet<Pid>,
    pub fields: BTreeMap<String, FieldValue>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Record {
    pids: BTreeSet<Pid>,
    relevant: BTreeMap<String, FieldValue>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    irrelevant: Vec<Detail>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    tags: Vec<PathTag>,
}

impl Record {
    pub fn new(pid: Pid, relevant: BTreeMap<String, FieldValue>) -> Self {
        Record {
            pids: BTreeSet::from([pid]),
            relevant,
            irrelevant: Vec::new(),
            tags: Vec::new(),
        }
    }

    pub(crate) fn derived(pids: BTreeSet<Pid>, relevant: BTreeMap<String, FieldValue>) -> Self {
        Record {
            pids,
            relevant,
            irrelevant: Vec::new(),
            tags: Vec::new(),
        }
    }

    pub fn pids(&self) -> &BTreeSet<Pid> {
        &self.pids
    }

    pub fn relevant(&self) -> &BTreeMap<String, FieldValue> {
        &self.relevant
    }

    pub fn irrelevant(&self) -> &[Detail] {
        &self.irrelevant
    }

    pub fn tags(&self) -> &[PathTag] {
        &self.tags
    }

    pub fn get(&self, field: &str) -> Option<&FieldValue> {
        self.relevant.get(field)
    }

    pub(crate) fn relevant_mut(&mut self) -> &mut BTreeMap<String, FieldValue> {
        &mut self.relevant
    }

    pub(crate) fn irrelevant_mut(&mut self) -> &mut Vec<Detail> {
        &mut self.irrelevant
    }

    pub(crate) fn pids_mut(&mut self) -> &mut BTreeSet<Pid> {
        &mut self.pids
    }

    pub fn push_tag(&mut self, tag: PathTag) {
        self.tags.push(tag);
    }

    pub fn pop_tag(&mut self) -> Option<PathTag> {
        self.tags.pop()
    }

    pub fn top_tag(&self) -> Option<&PathTag> {
        self.tags.last()
    }

    /// Every field value in this record, relevant or not, paired with each
    /// provenance id it is attributed to.
    pub fn triples(&self) -> Vec<(String, FieldValue, Pid)> {
        let mut out = Vec::new();
        for (f, v) in &self.relevant {
            for p in &self.pids {
                out.push((f.clone(), v.clone(), *p));
            }
        }
        for d in &self.irrelevant {
            for (f, v) in &d.fields {
                for p in &d.pids {
                    out.push((f.clone(), v.clone(), *p));
                }
            }
        }
        out
    }
}

/// Hands out sequential provenance ids, starting at 1.
#[derive(Debug, Clone)]
pub struct PidAllocator {
    next: u64,
}

impl Default for PidAllocator {
    fn default() -> Self {
        PidAllocator { next: 1 }
    }
}

impl PidAllocator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn starting_at(first: u64) -> Self {
        PidAllocator { next: first }
    }

    pub fn next_pid(&mut self) -> Pid {
        let p = Pid(self.next);
        self.next += 1;
        p
    }

    pub fn peek(&self) -> Pid {
        Pid(self.next)
    }
}

/// A multiset of records sharing one schema.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relation {
    schema: Schema,
    rows: Vec<Record>,
}

impl Relation {
    pub fn empty(schema: Schema) -> Self {
        Relation {
            schema,
            rows: Vec::new(),
        }
    }

    /// Builds a relation, checking that every record's relevant fields are
    /// exactly the schema's fields with admissible values.
    pub fn from_records(schema: Schema, rows: Vec<Record>) -> Result<Self, RelationError> {
        for (i, r) in rows.iter().enumerate() {
            check_row(&schema, i, &r.relevant)?;
        }
        Ok(Relation { schema, rows })
    }

    pub(crate) fn from_records_unchecked(schema: Schema, rows: Vec<Record>) -> Self {
        debug_assert!(rows
            .iter()
            .enumerate()
            .all(|(i, r)| check_row(&schema, i, &r.relevant).is_ok()));
        Relation { schema, rows }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn rows(&self) -> &[Record] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<Record> {
        self.rows
    }

    pub fn into_parts(self) -> (Schema, Vec<Record>) {
        (self.schema, self.rows)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Union of the provenance of every record.
    pub fn pids(&self) -> BTreeSet<Pid> {
        pids(self)
    }

    /// Relevant-field maps only, as a sorted multiset.
    pub fn relevant_multiset(&self) -> Vec<BTreeMap<String, FieldValue>> {
        let mut v: Vec<_> = self.rows.iter().map(|r| r.relevant.clone()).collect();
        v.sort();
        v
    }

    /// Sorted multiset of `(field, value, pid)` over relevant and irrelevant
    /// fields of every record.
    pub fn triples(&self) -> Vec<(String, FieldValue, Pid)> {
        let mut v: Vec<_> = self.rows.iter().flat_map(|r| r.triples()).collect();
        v.sort();
        v
    }
}

fn check_row(
    schema: &Schema,
    row: usize,
    fields: &BTreeMap<String, FieldValue>,
) -> Result<(), RelationError> {
    if fields.len() != schema.len() {
        return Err(RelationError::SchemaMismatch {
            row,
            detail: format!(
                "expected {} fields {}, found {}",
                schema.len(),
                schema,
                fields.len()
            ),
        });
    }
    for c in schema.columns() {
        match fields.get(&c.name) {
            None => {
                return Err(RelationError::SchemaMismatch {
                    row,
                    detail: format!("missing field `{}`", c.name),
                })
            }
            Some(v) if !c.ty.admits(v) => {
                return Err(RelationError::SchemaMismatch {
                    row,
                    detail: format!("field `{}` expects {}, found `{v}`", c.name, c.ty),
                })
            }
            Some(FieldValue::Missing(reason)) if reason.is_empty() => {
                return Err(RelationError::SchemaMismatch {
                    row,
                    detail: format!("field `{}` is missing without a reason", c.name),
                })
            }
            Some(FieldValue::Quantity { unit, .. }) if unit.is_empty() => {
                return Err(RelationError::SchemaMismatch {
                    row,
                    detail: format!("quantity in `{}` has no unit", c.name),
                })
            }
            Some(_) => {}
        }
    }
    Ok(())
}

/// Ingests rows with fresh sequential provenance ids starting at 1.
pub fn ingest(
    schema: Schema,
    rows: Vec<BTreeMap<String, FieldValue>>,
) -> Result<Relation, RelationError> {
    ingest_with(&mut PidAllocator::new(), schema, rows)
}

/// Ingests rows, drawing provenance ids from a shared allocator so that
/// several sources never collide.
pub fn ingest_with(
    alloc: &mut PidAllocator,
    schema: Schema,
    rows: Vec<BTreeMap<String, FieldValue>>,
) -> Result<Relation, RelationError> {
    for (i, r) in rows.iter().enumerate() {
        check_row(&schema, i, r)?;
    }
    let rows = rows
        .into_iter()
        .map(|fields| Record::new(alloc.next_pid(), fields))
        .collect();
    Ok(Relation { schema, rows })
}

pub fn pids(rel: &Relation) -> BTreeSet<Pid> {
    rel.rows.iter().flat_map(|r| r.pids.iter().copied()).collect()
}

/// Builds a field map from `(name, value)` pairs.
pub fn row<I, K, V>(pairs: I) -> BTreeMap<String, FieldValue>
where
    I: IntoIterator<Item = (K, V)>,
    K: Into<String>,
    V: Into<FieldValue>,
{
    pairs.into_iter().map(|(k, v)| (k.into(), v.into())).collect()
}
