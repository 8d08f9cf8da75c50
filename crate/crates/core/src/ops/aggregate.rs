use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::monoid::{MonoidElement, MonoidKind};
use crate::ops::join::JoinKey;
use crate::ops::OpError;
use crate::relation::{Column, Record, Relation, Schema, SemType};
use crate::value::{FieldValue, Pid};

/// Name of the record-count field every aggregate emits.
pub const COUNT_FIELD: &str = "count";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggKind {
    Count,
    Sum,
    Min,
    Max,
    Avg,
    SetOfIds,
    Paccioli,
}

impl AggKind {
    pub fn needs_amount(self) -> bool {
        matches!(self, AggKind::Sum | AggKind::Min | AggKind::Max | AggKind::Avg | AggKind::Paccioli)
    }

    fn prefix(self) -> &'static str {
        match self {
            AggKind::Count => "count",
            AggKind::Sum => "sum",
            AggKind::Min => "min",
            AggKind::Max => "max",
            AggKind::Avg => "avg",
            AggKind::SetOfIds => "ids",
            AggKind::Paccioli => "paccioli",
        }
    }

    fn kind(self, unit: &str) -> MonoidKind {
        match self {
            AggKind::Count => MonoidKind::Count,
            AggKind::Sum => MonoidKind::Sum(unit.to_string()),
            AggKind::Min => MonoidKind::Min(unit.to_string()),
            AggKind::Max => MonoidKind::Max(unit.to_string()),
            AggKind::Avg => MonoidKind::Avg(unit.to_string()),
            AggKind::SetOfIds => MonoidKind::SetOfIds,
            AggKind::Paccioli => MonoidKind::Paccioli,
        }
    }
}

impl fmt::Display for AggKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.prefix())
    }
}

/// One aggregated output: fold `field` with the monoid of `kind`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggSpec {
    pub field: String,
    pub kind: AggKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

impl AggSpec {
    pub fn new(kind: AggKind, field: impl Into<String>) -> Self {
        AggSpec {
            field: field.into(),
            kind,
            output: None,
        }
    }

    /// Output field name, `{kind}_{field}` unless overridden.
    pub fn output_name(&self) -> String {
        self.output
            .clone()
            .unwrap_or_else(|| format!("{}_{}", self.kind.prefix(), self.field))
    }
}

/// Output schema: grouping columns, one summary column per spec, then `count`.
pub fn aggregate_schema(input: &Schema, group_by: &[String], specs: &[AggSpec]) -> Result<Schema, OpError> {
    let mut cols = Vec::new();
    for g in group_by {
        let c = input.column(g).ok_or_else(|| OpError::UnknownField(g.clone()))?;
        cols.push(c.clone());
    }
    for s in specs {
        let c = input
            .column(&s.field)
            .ok_or_else(|| OpError::UnknownField(s.field.clone()))?;
        if s.kind.needs_amount() && !(c.ty.is_numeric() || c.ty == SemType::Any) {
            return Err(OpError::Type(format!("cannot {} over {} column `{}`", s.kind, c.ty, c.name)));
        }
        cols.push(Column::new(s.output_name(), SemType::Summary));
    }
    cols.push(Column::new(COUNT_FIELD, SemType::Summary));
    Schema::new(cols).map_err(|e| match e {
        crate::relation::RelationError::DuplicateField(f) => OpError::FieldCollision(f),
        other => other.into(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum GroupKey {
    Value(JoinKey),
    Missing(String),
}

fn group_key(v: Option<&FieldValue>) -> GroupKey {
    match v {
        Some(FieldValue::Missing(r)) => GroupKey::Missing(r.clone()),
        Some(v) => JoinKey::of(v)
            .map(GroupKey::Value)
            .unwrap_or_else(|| GroupKey::Missing(String::new())),
        None => GroupKey::Missing(String::new()),
    }
}

/// Unit label a spec folds under for one record: the value's own unit, or
/// the column's declared unit when the value is missing.
fn unit_for<'a>(col: &'a Column, v: Option<&'a FieldValue>) -> Option<&'a str> {
    match v.and_then(|v| v.as_amount()) {
        Some((_, u)) => Some(u),
        None => col.unit.as_deref(),
    }
}

fn element(spec: &AggSpec, unit: &str, v: Option<&FieldValue>) -> Result<MonoidElement, OpError> {
    let v = match v {
        None | Some(FieldValue::Missing(_)) => return Ok(spec.kind.kind(unit).unit()),
        Some(v) => v,
    };
    if spec.kind == AggKind::Count {
        return Ok(MonoidElement::Count(1));
    }
    if spec.kind == AggKind::SetOfIds {
        return Ok(MonoidElement::ids([v.clone()]));
    }
    let (d, _) = v
        .as_amount()
        .ok_or_else(|| OpError::Type(format!("`{}` is not numeric: {v}", spec.field)))?;
    Ok(match spec.kind {
        AggKind::Sum => MonoidElement::sum(unit, d),
        AggKind::Min => MonoidElement::min(unit, d),
        AggKind::Max => MonoidElement::max(unit, d),
        AggKind::Avg => MonoidElement::avg(unit, d, 1)?,
        AggKind::Paccioli => MonoidElement::from_signed(d),
        AggKind::Count | AggKind::SetOfIds => unreachable!(),
    })
}

struct Group {
    first: Record,
    pids: BTreeSet<Pid>,
    units: Vec<String>,
    acc: Vec<MonoidElement>,
    count: u64,
}

/// Groups by `group_by` and folds each spec with its monoid.
///
/// Each output record's pid set is the union of its group's pids, so
/// [`drill_down`] can recover the contributors. Amount specs over quantity
/// columns also group by unit so that unlike currencies are never added.
/// Missing values contribute the monoid unit. With no grouping columns an
/// empty input still yields one row whose count is zero.
pub fn aggregate(rel: Relation, group_by: &[String], specs: &[AggSpec]) -> Result<Relation, OpError> {
    let schema = aggregate_schema(rel.schema(), group_by, specs)?;
    let spec_cols: Vec<Column> = specs
        .iter()
        .map(|s| rel.schema().column(&s.field).cloned().expect("checked by schema"))
        .collect();
    let by_unit: Vec<bool> = specs
        .iter()
        .zip(&spec_cols)
        .map(|(s, c)| s.kind.needs_amount() && c.ty == SemType::Quantity)
        .collect();

    let mut slots: HashMap<(Vec<GroupKey>, Vec<Option<String>>), usize> = HashMap::new();
    let mut groups: Vec<Group> = Vec::new();
    for r in rel.into_rows() {
        let gk: Vec<GroupKey> = group_by.iter().map(|g| group_key(r.get(g))).collect();
        let units: Vec<Option<&str>> = specs
            .iter()
            .zip(&spec_cols)
            .map(|(s, c)| unit_for(c, r.get(&s.field)))
            .collect();
        let uk: Vec<Option<String>> = units
            .iter()
            .zip(&by_unit)
            .filter(|(_, b)| **b)
            .map(|(u, _)| u.map(str::to_string))
            .collect();
        let i = *slots.entry((gk, uk)).or_insert_with(|| {
            let units: Vec<String> = units.iter().map(|u| u.unwrap_or("").to_string()).collect();
            let acc = specs.iter().zip(&units).map(|(s, u)| s.kind.kind(u).unit()).collect();
            groups.push(Group {
                first: r.clone(),
                pids: BTreeSet::new(),
                units,
                acc,
                count: 0,
            });
            groups.len() - 1
        });
        let g = &mut groups[i];
        for (j, s) in specs.iter().enumerate() {
            let e = element(s, &g.units[j], r.get(&s.field))?;
            g.acc[j] = g.acc[j].fuse(&e)?;
        }
        g.pids.extend(r.pids().iter().copied());
        g.count += 1;
    }

    if groups.is_empty() && group_by.is_empty() {
        let units: Vec<String> = spec_cols.iter().map(|c| c.unit.clone().unwrap_or_default()).collect();
        let acc = specs.iter().zip(&units).map(|(s, u)| s.kind.kind(u).unit()).collect();
        groups.push(Group {
            first: Record::derived(BTreeSet::new(), BTreeMap::new()),
            pids: BTreeSet::new(),
            units,
            acc,
            count: 0,
        });
    }

    let rows = groups
        .into_iter()
        .map(|g| {
            let mut relevant = BTreeMap::new();
            for k in group_by {
                relevant.insert(k.clone(), g.first.get(k).cloned().expect("group field"));
            }
            for (s, e) in specs.iter().zip(g.acc) {
                relevant.insert(s.output_name(), FieldValue::Summary(e));
            }
            relevant.insert(COUNT_FIELD.to_string(), FieldValue::Summary(MonoidElement::Count(g.count)));
            Record::derived(g.pids, relevant)
        })
        .collect();
    Ok(Relation::from_records_unchecked(schema, rows))
}

/// Pids of the records that contributed to the summary row(s) whose fields
/// match `key`. Several rows can match when a group was split by unit.
pub fn drill_down(summary: &Relation, key: &BTreeMap<String, FieldValue>) -> Result<BTreeSet<Pid>, OpError> {
    for k in key.keys() {
        if !summary.schema().contains(k) {
            return Err(OpError::UnknownField(k.clone()));
        }
    }
    let mut found = false;
    let mut pids = BTreeSet::new();
    for r in summary.rows() {
        if key.iter().all(|(k, v)| group_key(r.get(k)) == group_key(Some(v))) {
            found = true;
            pids.extend(r.pids().iter().copied());
        }
    }
    if !found {
        let shown: Vec<String> = key.iter().map(|(k, v)| format!("{k}={v}")).collect();
        return Err(OpError::UnknownGroup(shown.join(", ")));
    }
    Ok(pids)
}
