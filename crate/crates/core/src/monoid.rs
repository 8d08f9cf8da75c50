//! Information monoids: the summaries that data spaces fuse.
//!
//! Each [`MonoidElement`] variant is one summarization kind. Elements of the
//! same kind (and unit label) fuse associatively, with [`MonoidKind::unit`] as
//! the two-sided identity. Every kind has a natural *growth* order under which
//! fusion never loses information; the *derived* order is its reverse and
//! satisfies `a ⋄ b ≤ a` and `a ⋄ b ≤ b`.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decimal::Decimal;
use crate::value::FieldValue;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MonoidError {
    #[error("kind mismatch: expected {expected}, found {found}")]
    KindMismatch { expected: String, found: String },
    #[error("monoid arithmetic overflow")]
    Overflow,
    #[error("{0} has no derived order: fusion is not a lower bound on a signed carrier")]
    NotDerivable(String),
    #[error("invalid element: {0}")]
    InvalidElement(String),
}

/// Bound carried by min/max summaries. `Unbounded` is the identity:
/// +∞ for `Min`, −∞ for `Max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extreme {
    Unbounded,
    Value(Decimal),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonoidElement {
    Count(u64),
    Sum { unit: String, value: Decimal },
    Min { unit: String, value: Extreme },
    Max { unit: String, value: Extreme },
    /// Running `(sum, count)` pair; the mean is only formed on presentation.
    Avg { unit: String, sum: Decimal, count: u64 },
    SetOfIds(BTreeSet<FieldValue>),
    /// Double-entry pair over ℝ₊ × ℝ₊.
    Paccioli { debit: Decimal, credit: Decimal },
    Tuple(Vec<MonoidElement>),
}

/// The shape of a monoid element: variant plus unit label (and arity for tuples).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonoidKind {
    Count,
    Sum(String),
    Min(String),
    Max(String),
    Avg(String),
    SetOfIds,
    Paccioli,
    Tuple(Vec<MonoidKind>),
}

impl MonoidKind {
    /// Identity element of this kind.
    pub fn unit(&self) -> MonoidElement {
        match self {
            MonoidKind::Count => MonoidElement::Count(0),
            MonoidKind::Sum(u) => MonoidElement::Sum {
                unit: u.clone(),
                value: Decimal::ZERO,
            },
            MonoidKind::Min(u) => MonoidElement::Min {
                unit: u.clone(),
                value: Extreme::Unbounded,
            },
            MonoidKind::Max(u) => MonoidElement::Max {
                unit: u.clone(),
                value: Extreme::Unbounded,
            },
            MonoidKind::Avg(u) => MonoidElement::Avg {
                unit: u.clone(),
                sum: Decimal::ZERO,
                count: 0,
            },
            MonoidKind::SetOfIds => MonoidElement::SetOfIds(BTreeSet::new()),
            MonoidKind::Paccioli => MonoidElement::Paccioli {
                debit: Decimal::ZERO,
                credit: Decimal::ZERO,
            },
            MonoidKind::Tuple(ks) => MonoidElement::Tuple(ks.iter().map(|k| k.unit()).collect()),
        }
    }

    fn has_signed_carrier(&self) -> bool {
        match self {
            MonoidKind::Sum(_) => true,
            MonoidKind::Tuple(ks) => ks.iter().any(|k| k.has_signed_carrier()),
            _ => false,
        }
    }
}

impl fmt::Display for MonoidKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MonoidKind::Count => f.write_str("count"),
            MonoidKind::Sum(u) => write!(f, "sum[{u}]"),
            MonoidKind::Min(u) => write!(f, "min[{u}]"),
            MonoidKind::Max(u) => write!(f, "max[{u}]"),
            MonoidKind::Avg(u) => write!(f, "avg[{u}]"),
            MonoidKind::SetOfIds => f.write_str("set"),
            MonoidKind::Paccioli => f.write_str("paccioli"),
            MonoidKind::Tuple(ks) => {
                f.write_str("(")?;
                for (i, k) in ks.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{k}")?;
                }
                f.write_str(")")
            }
        }
    }
}

fn mismatch(expected: &MonoidKind, found: &MonoidKind) -> MonoidError {
    MonoidError::KindMismatch {
        expected: expected.to_string(),
        found: found.to_string(),
    }
}

impl MonoidElement {
    pub fn kind(&self) -> MonoidKind {
        match self {
            MonoidElement::Count(_) => MonoidKind::Count,
            MonoidElement::Sum { unit, .. } => MonoidKind::Sum(unit.clone()),
            MonoidElement::Min { unit, .. } => MonoidKind::Min(unit.clone()),
            MonoidElement::Max { unit, .. } => MonoidKind::Max(unit.clone()),
            MonoidElement::Avg { unit, .. } => MonoidKind::Avg(unit.clone()),
            MonoidElement::SetOfIds(_) => MonoidKind::SetOfIds,
            MonoidElement::Paccioli { .. } => MonoidKind::Paccioli,
            MonoidElement::Tuple(es) => MonoidKind::Tuple(es.iter().map(|e| e.kind()).collect()),
        }
    }

    pub fn sum(unit: impl Into<String>, value: Decimal) -> Self {
        MonoidElement::Sum {
            unit: unit.into(),
            value,
        }
    }

    pub fn min(unit: impl Into<String>, value: Decimal) -> Self {
        MonoidElement::Min {
            unit: unit.into(),
            value: Extreme::Value(value),
        }
    }

    pub fn max(unit: impl Into<String>, value: Decimal) -> Self {
        MonoidElement::Max {
            unit: unit.into(),
            value: Extreme::Value(value),
        }
    }

    pub fn avg(unit: impl Into<String>, sum: Decimal, count: u64) -> Result<Self, MonoidError> {
        if count == 0 && sum != Decimal::ZERO {
            return Err(MonoidError::InvalidElement(
                "average pair with zero count must have zero sum".into(),
            ));
        }
        Ok(MonoidElement::Avg {
            unit: unit.into(),
            sum,
            count,
        })
    }

    pub fn ids<I: IntoIterator<Item = FieldValue>>(ids: I) -> Self {
        MonoidElement::SetOfIds(ids.into_iter().collect())
    }

    pub fn paccioli(debit: Decimal, credit: Decimal) -> Result<Self, MonoidError> {
        if debit.is_negative() || credit.is_negative() {
            return Err(MonoidError::InvalidElement(
                "paccioli sides must be non-negative".into(),
            ));
        }
        Ok(MonoidElement::Paccioli { debit, credit })
    }

    /// Embeds a signed amount as a double-entry pair: `(x, 0)` for `x ≥ 0`,
    /// `(0, -x)` otherwise.
    pub fn from_signed(amount: Decimal) -> Self {
        if amount.is_negative() {
            MonoidElement::Paccioli {
                debit: Decimal::ZERO,
                credit: -amount,
            }
        } else {
            MonoidElement::Paccioli {
                debit: amount,
                credit: Decimal::ZERO,
            }
        }
    }

    /// Debit minus credit, for Paccioli elements.
    pub fn balance(&self) -> Option<Decimal> {
        match self {
            MonoidElement::Paccioli { debit, credit } => Some(*debit - *credit),
            _ => None,
        }
    }

    /// Presentation-time mean of an `Avg` pair; `None` when empty.
    pub fn mean(&self) -> Option<Decimal> {
        match self {
            MonoidElement::Avg { sum, count, .. } if *count > 0 => sum.checked_div_count(*count).ok(),
            _ => None,
        }
    }

    /// `self ⋄ other`.
    pub fn fuse(&self, other: &MonoidElement) -> Result<MonoidElement, MonoidError> {
        use MonoidElement::*;
        let add = |a: Decimal, b: Decimal| a.checked_add(b).ok_or(MonoidError::Overflow);
        match (self, other) {
            (Count(a), Count(b)) => a.checked_add(*b).map(Count).ok_or(MonoidError::Overflow),
            (Sum { unit: u1, value: a }, Sum { unit: u2, value: b }) if u1 == u2 => Ok(Sum {
                unit: u1.clone(),
                value: add(*a, *b)?,
            }),
            (Min { unit: u1, value: a }, Min { unit: u2, value: b }) if u1 == u2 => Ok(Min {
                unit: u1.clone(),
                value: match (a, b) {
                    (Extreme::Unbounded, x) | (x, Extreme::Unbounded) => *x,
                    (Extreme::Value(x), Extreme::Value(y)) => Extreme::Value(*x.min(y)),
                },
            }),
            (Max { unit: u1, value: a }, Max { unit: u2, value: b }) if u1 == u2 => Ok(Max {
                unit: u1.clone(),
                value: match (a, b) {
                    (Extreme::Unbounded, x) | (x, Extreme::Unbounded) => *x,
                    (Extreme::Value(x), Extreme::Value(y)) => Extreme::Value(*x.max(y)),
                },
            }),
            (
                Avg {
                    unit: u1,
                    sum: s1,
                    count: c1,
                },
                Avg {
                    unit: u2,
                    sum: s2,
                    count: c2,
                },
            ) if u1 == u2 => Ok(Avg {
                unit: u1.clone(),
                sum: add(*s1, *s2)?,
                count: c1.checked_add(*c2).ok_or(MonoidError::Overflow)?,
            }),
            (SetOfIds(a), SetOfIds(b)) => Ok(SetOfIds(a.union(b).cloned().collect())),
            (
                Paccioli {
                    debit: d1,
                    credit: c1,
                },
                Paccioli {
                    debit: d2,
                    credit: c2,
                },
            ) => Ok(Paccioli {
                debit: add(*d1, *d2)?,
                credit: add(*c1, *c2)?,
            }),
            (Tuple(xs), Tuple(ys)) if xs.len() == ys.len() => xs
                .iter()
                .zip(ys)
                .map(|(x, y)| x.fuse(y))
                .collect::<Result<Vec<_>, _>>()
                .map(Tuple),
            _ => Err(mismatch(&self.kind(), &other.kind())),
        }
    }

    /// Natural growth order: `a ≤ b` when `b` carries at least the
    /// information of `a`. Fusion is monotone in both arguments.
    pub fn grows_into(&self, other: &MonoidElement) -> Result<bool, MonoidError> {
        use MonoidElement::*;
        Ok(match (self, other) {
            (Count(a), Count(b)) => a <= b,
            (Sum { unit: u1, value: a }, Sum { unit: u2, value: b }) if u1 == u2 => a <= b,
            (Min { unit: u1, value: a }, Min { unit: u2, value: b }) if u1 == u2 => match (a, b) {
                (Extreme::Unbounded, _) => true,
                (Extreme::Value(_), Extreme::Unbounded) => false,
                (Extreme::Value(x), Extreme::Value(y)) => y <= x,
            },
            (Max { unit: u1, value: a }, Max { unit: u2, value: b }) if u1 == u2 => match (a, b) {
                (Extreme::Unbounded, _) => true,
                (Extreme::Value(_), Extreme::Unbounded) => false,
                (Extreme::Value(x), Extreme::Value(y)) => x <= y,
            },
            (
                Avg {
                    unit: u1,
                    count: c1,
                    ..
                },
                Avg {
                    unit: u2,
                    count: c2,
                    ..
                },
            ) if u1 == u2 => self == other || c1 < c2,
            (SetOfIds(a), SetOfIds(b)) => a.is_subset(b),
            (
                Paccioli {
                    debit: d1,
                    credit: c1,
                },
                Paccioli {
                    debit: d2,
                    credit: c2,
                },
            ) => d1 <= d2 && c1 <= c2,
            (Tuple(xs), Tuple(ys)) if xs.len() == ys.len() => {
                for (x, y) in xs.iter().zip(ys) {
                    if !x.grows_into(y)? {
                        return Ok(false);
                    }
                }
                true
            }
            _ => return Err(mismatch(&self.kind(), &other.kind())),
        })
    }
}

impl fmt::Display for MonoidElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn with_unit(f: &mut fmt::Formatter<'_>, v: impl fmt::Display, unit: &str) -> fmt::Result {
            if unit.is_empty() {
                write!(f, "{v}")
            } else {
                write!(f, "{v} {unit}")
            }
        }
        match self {
            MonoidElement::Count(n) => write!(f, "count {n}"),
            MonoidElement::Sum { unit, value } => {
                f.write_str("sum ")?;
                with_unit(f, value, unit)
            }
            MonoidElement::Min { unit, value } => match value {
                Extreme::Unbounded => f.write_str("min +inf"),
                Extreme::Value(v) => {
                    f.write_str("min ")?;
                    with_unit(f, v, unit)
                }
            },
            MonoidElement::Max { unit, value } => match value {
                Extreme::Unbounded => f.write_str("max -inf"),
                Extreme::Value(v) => {
                    f.write_str("max ")?;
                    with_unit(f, v, unit)
                }
            },
            MonoidElement::Avg { unit, sum, count } => {
                f.write_str("avg ")?;
                with_unit(f, format_args!("{sum}/{count}"), unit)
            }
            MonoidElement::SetOfIds(ids) => {
                f.write_str("{")?;
                for (i, id) in ids.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{id}")?;
                }
                f.write_str("}")
            }
            MonoidElement::Paccioli { debit, credit } => write!(f, "debit {debit} credit {credit}"),
            MonoidElement::Tuple(es) => {
                f.write_str("(")?;
                for (i, e) in es.iter().enumerate() {
                    if i > 0 {
                        f.write_str("; ")?;
                    }
                    write!(f, "{e}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Which partial order an [`InformationMonoid`] uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderKind {
    /// Information grows under fusion (`a ≤ a ⋄ b`).
    Growth,
    /// Reverse of growth: fusion is a lower bound (`a ⋄ b ≤ a`).
    Derived,
}

/// A monoid `(𝕞, e, ⋄)` together with its partial order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InformationMonoid {
    kind: MonoidKind,
    order: OrderKind,
}

impl InformationMonoid {
    pub fn new(kind: MonoidKind) -> Self {
        InformationMonoid {
            kind,
            order: OrderKind::Growth,
        }
    }

    /// Monoid ordered by the derived laws. Signed sums have no such order:
    /// adding a negative amount would have to be both above and below.
    pub fn derived(kind: MonoidKind) -> Result<Self, MonoidError> {
        if kind.has_signed_carrier() {
            return Err(MonoidError::NotDerivable(kind.to_string()));
        }
        Ok(InformationMonoid {
            kind,
            order: OrderKind::Derived,
        })
    }

    pub fn kind(&self) -> &MonoidKind {
        &self.kind
    }

    pub fn order(&self) -> OrderKind {
        self.order
    }

    pub fn derived_order_flag(&self) -> bool {
        self.order == OrderKind::Derived
    }

    pub fn unit(&self) -> MonoidElement {
        self.kind.unit()
    }

    fn check(&self, e: &MonoidElement) -> Result<(), MonoidError> {
        let k = e.kind();
        if k != self.kind {
            return Err(mismatch(&self.kind, &k));
        }
        Ok(())
    }

    pub fn fuse(&self, a: &MonoidElement, b: &MonoidElement) -> Result<MonoidElement, MonoidError> {
        self.check(a)?;
        self.check(b)?;
        a.fuse(b)
    }

    pub fn leq(&self, a: &MonoidElement, b: &MonoidElement) -> Result<bool, MonoidError> {
        self.check(a)?;
        self.check(b)?;
        match self.order {
            OrderKind::Growth => a.grows_into(b),
            OrderKind::Derived => b.grows_into(a),
        }
    }

    /// Folds any number of elements, starting from the unit.
    pub fn fold<'a, I>(&self, items: I) -> Result<MonoidElement, MonoidError>
    where
        I: IntoIterator<Item = &'a MonoidElement>,
    {
        items
            .into_iter()
            .try_fold(self.unit(), |acc, x| self.fuse(&acc, x))
    }
}

/// Free-standing `fuse` for callers holding a monoid.
pub fn fuse(
    m: &InformationMonoid,
    a: &MonoidElement,
    b: &MonoidElement,
) -> Result<MonoidElement, MonoidError> {
    m.fuse(a, b)
}
