//! Cell values and provenance identifiers.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::decimal::Decimal;
use crate::monoid::MonoidElement;

/// Provenance identifier, assigned once at ingestion and never rewritten.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Pid(pub u64);

impl fmt::Display for Pid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A single cell.
///
/// `Missing` is a first-class value: it keeps the reason the cell has no
/// usable content (`unknown`, `closed`, `priceless`, ...) so the record can
/// still be routed and summarized.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldValue {
    Integer(i64),
    Decimal(Decimal),
    Text(String),
    Quantity { amount: Decimal, unit: String },
    Missing(String),
    Summary(MonoidElement),
}

impl FieldValue {
    pub fn text(s: impl Into<String>) -> Self {
        FieldValue::Text(s.into())
    }

    pub fn missing(reason: impl Into<String>) -> Self {
        FieldValue::Missing(reason.into())
    }

    pub fn quantity(amount: Decimal, unit: impl Into<String>) -> Self {
        FieldValue::Quantity {
            amount,
            unit: unit.into(),
        }
    }

    pub fn is_missing(&self) -> bool {
        matches!(self, FieldValue::Missing(_))
    }

    /// Numeric payload and unit label (empty for dimensionless numbers).
    pub fn as_amount(&self) -> Option<(Decimal, &str)> {
        match self {
            FieldValue::Integer(i) => Some((Decimal::from_int(*i), "")),
            FieldValue::Decimal(d) => Some((*d, "")),
            FieldValue::Quantity { amount, unit } => Some((*amount, unit.as_str())),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            FieldValue::Text(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for FieldValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldValue::Integer(i) => write!(f, "{i}"),
            FieldValue::Decimal(d) => write!(f, "{d}"),
            FieldValue::Text(s) => f.write_str(s),
            FieldValue::Quantity { amount, unit } => write!(f, "{amount} {unit}"),
            FieldValue::Missing(reason) => write!(f, "[{reason}]"),
            FieldValue::Summary(m) => write!(f, "{m}"),
        }
    }
}

impl From<i64> for FieldValue {
    fn from(v: i64) -> Self {
        FieldValue::Integer(v)
    }
}

impl From<Decimal> for FieldValue {
    fn from(v: Decimal) -> Self {
        FieldValue::Decimal(v)
    }
}

impl From<&str> for FieldValue {
    fn from(v: &str) -> Self {
        FieldValue::Text(v.to_string())
    }
}

impl From<MonoidElement> for FieldValue {
    fn from(v: MonoidElement) -> Self {
        FieldValue::Summary(v)
    }
}
