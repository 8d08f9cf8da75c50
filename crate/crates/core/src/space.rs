//! Data spaces: a carrier (records of a schema), an information monoid with
//! its order, and a measure mapping each record to a monoid element.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::monoid::{InformationMonoid, MonoidElement, MonoidError, MonoidKind};
use crate::relation::{Record, Schema, Side};
use crate::value::FieldValue;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpaceError {
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("`{0}` is not a product space")]
    NotAProduct(String),
    #[error(transparent)]
    Monoid(#[from] MonoidError),
}

pub type MeasureFn = Arc<dyn Fn(&Record) -> Result<MonoidElement, MonoidError> + Send + Sync>;

/// A data space over records of `schema`.
#[derive(Clone)]
pub struct DataSpace {
    name: String,
    schema: Schema,
    monoid: InformationMonoid,
    measure: MeasureFn,
    components: Option<Box<(DataSpace, DataSpace)>>,
}

impl fmt::Debug for DataSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DataSpace")
            .field("name", &self.name)
            .field("schema", &self.schema)
            .field("monoid", &self.monoid)
            .finish_non_exhaustive()
    }
}

impl DataSpace {
    pub fn new<F>(name: impl Into<String>, schema: Schema, monoid: InformationMonoid, measure: F) -> Self
    where
        F: Fn(&Record) -> Result<MonoidElement, MonoidError> + Send + Sync + 'static,
    {
        DataSpace {
            name: name.into(),
            schema,
            monoid,
            measure: Arc::new(measure),
            components: None,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn monoid(&self) -> &InformationMonoid {
        &self.monoid
    }

    /// Same space ordered by the derived order. Fails for signed sums.
    pub fn with_derived_order(mut self) -> Result<Self, SpaceError> {
        self.monoid = InformationMonoid::derived(self.monoid.kind().clone())?;
        Ok(self)
    }

    /// `μ(r)`, checked to be of this space's monoid kind.
    pub fn measure(&self, r: &Record) -> Result<MonoidElement, MonoidError> {
        let e = (self.measure)(r)?;
        if e.kind() != *self.monoid.kind() {
            return Err(MonoidError::KindMismatch {
                expected: self.monoid.kind().to_string(),
                found: e.kind().to_string(),
            });
        }
        Ok(e)
    }

    /// Fusion of the measures of many records.
    pub fn measure_all<'a, I>(&self, rows: I) -> Result<MonoidElement, MonoidError>
    where
        I: IntoIterator<Item = &'a Record>,
    {
        rows.into_iter()
            .try_fold(self.monoid.unit(), |acc, r| self.monoid.fuse(&acc, &self.measure(r)?))
    }

    pub fn fuse(&self, a: &MonoidElement, b: &MonoidElement) -> Result<MonoidElement, MonoidError> {
        self.monoid.fuse(a, b)
    }

    pub fn leq(&self, a: &MonoidElement, b: &MonoidElement) -> Result<bool, MonoidError> {
        self.monoid.leq(a, b)
    }

    /// For product spaces, the component on `side`.
    pub fn project_info(&self, side: Side) -> Result<&DataSpace, SpaceError> {
        let (l, r) = self
            .components
            .as_deref()
            .ok_or_else(|| SpaceError::NotAProduct(self.name.clone()))?;
        Ok(match side {
            Side::Inl => l,
            Side::Inr => r,
        })
    }

    /// Projects a product element onto one component.
    pub fn project_element(&self, side: Side, e: &MonoidElement) -> Result<MonoidElement, SpaceError> {
        self.project_info(side)?;
        match e {
            MonoidElement::Tuple(parts) if parts.len() == 2 => Ok(match side {
                Side::Inl => parts[0].clone(),
                Side::Inr => parts[1].clone(),
            }),
            other => Err(SpaceError::Monoid(MonoidError::InvalidElement(format!(
                "expected a pair, got {other}"
            )))),
        }
    }
}

fn pair_kind(a: &DataSpace, b: &DataSpace) -> MonoidKind {
    MonoidKind::Tuple(vec![a.monoid.kind().clone(), b.monoid.kind().clone()])
}

/// The relation itself as a data space: each record measures to the set of
/// its provenance ids, fused by union and ordered by inclusion.
pub fn identity_space(name: impl Into<String>, schema: Schema) -> DataSpace {
    DataSpace::new(name, schema, InformationMonoid::new(MonoidKind::SetOfIds), |r| {
        Ok(MonoidElement::ids(
            r.pids().iter().map(|p| FieldValue::Integer(p.0 as i64)),
        ))
    })
}

/// Space over a tagged union: a left-tagged record measures to `(μa, e)`, a
/// right-tagged one to `(e, μb)`.
pub fn disjoint_product(a: &DataSpace, b: &DataSpace) -> Result<DataSpace, SpaceError> {
    if !a.schema.same_fields(&b.schema) {
        return Err(SpaceError::SchemaMismatch(format!("{} vs {}", a.schema, b.schema)));
    }
    let (la, lb) = (a.clone(), b.clone());
    let mut s = DataSpace::new(
        format!("{}+{}", a.name, b.name),
        a.schema.clone(),
        InformationMonoid::new(pair_kind(a, b)),
        move |r| match r.top_tag().map(|t| t.side) {
            Some(Side::Inl) => Ok(MonoidElement::Tuple(vec![la.measure(r)?, lb.monoid.unit()])),
            Some(Side::Inr) => Ok(MonoidElement::Tuple(vec![la.monoid.unit(), lb.measure(r)?])),
            None => Err(MonoidError::InvalidElement(
                "record in a disjoint product needs a path tag".into(),
            )),
        },
    );
    s.components = Some(Box::new((a.clone(), b.clone())));
    Ok(s)
}

/// Two measures of the same records side by side.
pub fn parallel_product(a: &DataSpace, b: &DataSpace) -> Result<DataSpace, SpaceError> {
    if !a.schema.same_fields(&b.schema) {
        return Err(SpaceError::SchemaMismatch(format!("{} vs {}", a.schema, b.schema)));
    }
    let (la, lb) = (a.clone(), b.clone());
    let mut s = DataSpace::new(
        format!("{}&{}", a.name, b.name),
        a.schema.clone(),
        InformationMonoid::new(pair_kind(a, b)),
        move |r| Ok(MonoidElement::Tuple(vec![la.measure(r)?, lb.measure(r)?])),
    );
    s.components = Some(Box::new((a.clone(), b.clone())));
    Ok(s)
}

/// Space over joined records whose fields come from both inputs; each side
/// is measured on its own fields and can be recovered with
/// [`DataSpace::project_info`].
pub fn recons_product(a: &DataSpace, b: &DataSpace) -> Result<DataSpace, SpaceError> {
    let schema = a
        .schema
        .extended(b.schema.columns().iter().filter(|c| !a.schema.contains(&c.name)).cloned())
        .map_err(|e| SpaceError::SchemaMismatch(e.to_string()))?;
    let (la, lb) = (a.clone(), b.clone());
    let mut s = DataSpace::new(
        format!("{}x{}", a.name, b.name),
        schema,
        InformationMonoid::new(pair_kind(a, b)),
        move |r| Ok(MonoidElement::Tuple(vec![la.measure(r)?, lb.measure(r)?])),
    );
    s.components = Some(Box::new((a.clone(), b.clone())));
    Ok(s)
}

/// Serializable measure declarations used by pipeline documents.
///
/// A record without the field, with a missing value, or with an amount in a
/// different unit measures to the unit element: it belongs to another space.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "measure", rename_all = "snake_case")]
pub enum MeasureSpec {
    Count,
    Identity,
    Sum {
        field: String,
        #[serde(default)]
        unit: String,
    },
    Min {
        field: String,
        #[serde(default)]
        unit: String,
    },
    Max {
        field: String,
        #[serde(default)]
        unit: String,
    },
    Avg {
        field: String,
        #[serde(default)]
        unit: String,
    },
    Ids {
        field: String,
    },
    Paccioli {
        field: String,
    },
}

impl MeasureSpec {
    pub fn kind(&self) -> MonoidKind {
        match self {
            MeasureSpec::Count => MonoidKind::Count,
            MeasureSpec::Identity | MeasureSpec::Ids { .. } => MonoidKind::SetOfIds,
            MeasureSpec::Sum { unit, .. } => MonoidKind::Sum(unit.clone()),
            MeasureSpec::Min { unit, .. } => MonoidKind::Min(unit.clone()),
            MeasureSpec::Max { unit, .. } => MonoidKind::Max(unit.clone()),
            MeasureSpec::Avg { unit, .. } => MonoidKind::Avg(unit.clone()),
            MeasureSpec::Paccioli { .. } => MonoidKind::Paccioli,
        }
    }

    /// `μ(r)` for this declaration.
    pub fn element(&self, r: &Record) -> Result<MonoidElement, MonoidError> {
        let amount = |field: &str, unit: &str| {
            r.get(field)
                .and_then(|v| v.as_amount())
                .filter(|(_, u)| *u == unit)
                .map(|(d, _)| d)
        };
        Ok(match self {
            MeasureSpec::Count => MonoidElement::Count(1),
            MeasureSpec::Identity => MonoidElement::ids(
                r.pids().iter().map(|p| FieldValue::Integer(p.0 as i64)),
            ),
            MeasureSpec::Ids { field } => match r.get(field) {
                Some(v) if !v.is_missing() => MonoidElement::ids([v.clone()]),
                _ => self.kind().unit(),
            },
            MeasureSpec::Sum { field, unit } => match amount(field, unit) {
                Some(d) => MonoidElement::sum(unit.clone(), d),
                None => self.kind().unit(),
            },
            MeasureSpec::Min { field, unit } => match amount(field, unit) {
                Some(d) => MonoidElement::min(unit.clone(), d),
                None => self.kind().unit(),
            },
            MeasureSpec::Max { field, unit } => match amount(field, unit) {
                Some(d) => MonoidElement::max(unit.clone(), d),
                None => self.kind().unit(),
            },
            MeasureSpec::Avg { field, unit } => match amount(field, unit) {
                Some(d) => MonoidElement::avg(unit.clone(), d, 1)?,
                None => self.kind().unit(),
            },
            MeasureSpec::Paccioli { field } => match amount(field, "") {
                Some(d) => MonoidElement::from_signed(d),
                None => self.kind().unit(),
            },
        })
    }

    pub fn to_space(&self, name: impl Into<String>, schema: Schema) -> DataSpace {
        let spec = self.clone();
        DataSpace::new(name, schema, InformationMonoid::new(self.kind()), move |r| spec.element(r))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decimal::Decimal;
    use crate::relation::{ingest, row, PathTag, SemType};

    fn d(s: &str) -> Decimal {
        s.parse().unwrap()
    }

    fn items() -> Vec<Record> {
        ingest(
            Schema::of(&[("name", SemType::Text), ("price", SemType::Quantity)]),
            vec![
                row([("name", FieldValue::text("a")), ("price", FieldValue::quantity(d("2"), "USD"))]),
                row([("name", FieldValue::text("b")), ("price", FieldValue::quantity(d("3"), "USD"))]),
                row([("name", FieldValue::text("c")), ("price", FieldValue::quantity(d("4"), "EUR"))]),
                row([("name", FieldValue::text("d")), ("price", FieldValue::missing("priceless"))]),
            ],
        )
        .unwrap()
        .into_rows()
    }

    fn schema() -> Schema {
        Schema::of(&[("name", SemType::Text), ("price", SemType::Quantity)])
    }

    #[test]
    fn sum_per_unit_ignores_other_units() {
        let usd = MeasureSpec::Sum { field: "price".into(), unit: "USD".into() }.to_space("usd", schema());
        assert_eq!(usd.measure_all(&items()).unwrap(), MonoidElement::sum("USD", d("5")));
    }

    #[test]
    fn identity_space_unions_pids() {
        let s = identity_space("id", schema());
        let rows = items();
        let all = s.measure_all(&rows).unwrap();
        let one = s.measure(&rows[0]).unwrap();
        assert!(s.leq(&one, &all).unwrap());
        assert!(!s.leq(&all, &one).unwrap());
    }

    #[test]
    fn parallel_product_projects_back() {
        let c = MeasureSpec::Count.to_space("n", schema());
        let i = MeasureSpec::Ids { field: "name".into() }.to_space("names", schema());
        let p = parallel_product(&c, &i).unwrap();
        let rows = items();
        let m = p.measure_all(&rows).unwrap();
        assert_eq!(p.project_element(Side::Inl, &m).unwrap(), c.measure_all(&rows).unwrap());
        assert_eq!(p.project_element(Side::Inr, &m).unwrap(), i.measure_all(&rows).unwrap());
        assert_eq!(p.project_info(Side::Inr).unwrap().name(), "names");
        assert!(c.project_info(Side::Inl).is_err());
    }

    #[test]
    fn parallel_product_needs_same_carrier() {
        let c = MeasureSpec::Count.to_space("n", schema());
        let other = MeasureSpec::Count.to_space("m", Schema::of(&[("x", SemType::Integer)]));
        assert!(matches!(parallel_product(&c, &other), Err(SpaceError::SchemaMismatch(_))));
    }

    #[test]
    fn disjoint_product_uses_tags() {
        let c = MeasureSpec::Count.to_space("n", schema());
        let s = MeasureSpec::Sum { field: "price".into(), unit: "USD".into() }.to_space("usd", schema());
        let p = disjoint_product(&c, &s).unwrap();
        let mut rows = items();
        rows[0].push_tag(PathTag::new(Side::Inl, "u"));
        rows[1].push_tag(PathTag::new(Side::Inr, "u"));
        let m = p.measure_all(&rows[..2]).unwrap();
        assert_eq!(
            m,
            MonoidElement::Tuple(vec![MonoidElement::Count(1), MonoidElement::sum("USD", d("3"))])
        );
        assert!(p.measure(&rows[2]).is_err());
    }

    #[test]
    fn recons_product_spans_both_schemas() {
        let a = MeasureSpec::Count.to_space("a", schema());
        let b = MeasureSpec::Max { field: "w".into(), unit: "kg".into() }
            .to_space("b", Schema::of(&[("name", SemType::Text), ("w", SemType::Quantity)]));
        let p = recons_product(&a, &b).unwrap();
        assert_eq!(p.schema().len(), 3);
        assert_eq!(p.project_info(Side::Inl).unwrap().name(), "a");
    }

    #[test]
    fn signed_sum_has_no_derived_order() {
        let s = MeasureSpec::Sum { field: "price".into(), unit: "USD".into() }.to_space("usd", schema());
        assert!(s.with_derived_order().is_err());
        let m = MeasureSpec::Max { field: "price".into(), unit: "USD".into() }.to_space("max", schema());
        let m = m.with_derived_order().unwrap();
        let small = MonoidElement::max("USD", d("1"));
        let big = MonoidElement::max("USD", d("9"));
        assert!(m.leq(&big, &small).unwrap());
    }
}
