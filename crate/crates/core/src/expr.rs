//! Scalar expressions and predicates evaluated per record.
//!
//! Evaluation is total. Arithmetic on a missing input yields a missing
//! output carrying the first reason seen. Unit conflicts, type errors and
//! division by zero also yield `Missing` with a reason. Predicates use
//! three-valued logic; callers that partition collapse `Unknown` into
//! rejection.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::relation::{Record, Schema, SemType};
use crate::stream::ErrorRecord;
use crate::value::FieldValue;

/// Anything fields can be read from.
pub trait FieldLookup {
    fn field(&self, name: &str) -> Option<FieldValue>;
}

impl FieldLookup for Record {
    fn field(&self, name: &str) -> Option<FieldValue> {
        self.get(name).cloned()
    }
}

impl FieldLookup for BTreeMap<String, FieldValue> {
    fn field(&self, name: &str) -> Option<FieldValue> {
        self.get(name).cloned()
    }
}

impl FieldLookup for ErrorRecord {
    fn field(&self, name: &str) -> Option<FieldValue> {
        self.get(name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expr {
    Field(String),
    Const(FieldValue),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
}

#[allow(clippy::should_implement_trait)]
impl Expr {
    pub fn field(name: impl Into<String>) -> Self {
        Expr::Field(name.into())
    }

    pub fn lit(v: impl Into<FieldValue>) -> Self {
        Expr::Const(v.into())
    }

    pub fn add(a: Expr, b: Expr) -> Self {
        Expr::Add(Box::new(a), Box::new(b))
    }

    pub fn sub(a: Expr, b: Expr) -> Self {
        Expr::Sub(Box::new(a), Box::new(b))
    }

    pub fn mul(a: Expr, b: Expr) -> Self {
        Expr::Mul(Box::new(a), Box::new(b))
    }

    pub fn div(a: Expr, b: Expr) -> Self {
        Expr::Div(Box::new(a), Box::new(b))
    }

    pub fn fields(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect_fields(&mut out);
        out
    }

    fn collect_fields<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            Expr::Field(f) => {
                out.insert(f);
            }
            Expr::Const(_) => {}
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.collect_fields(out);
                b.collect_fields(out);
            }
        }
    }

    /// Static result type against a schema.
    pub fn infer(&self, schema: &Schema) -> Result<SemType, String> {
        match self {
            Expr::Field(f) => schema
                .column(f)
                .map(|c| c.ty)
                .ok_or_else(|| format!("unknown field `{f}`")),
            Expr::Const(v) => Ok(type_of(v)),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                let ta = a.infer(schema)?;
                let tb = b.infer(schema)?;
                let numeric = |t: SemType| t.is_numeric() || t == SemType::Any;
                if !numeric(ta) || !numeric(tb) {
                    return Err(format!("arithmetic on non-numeric operands ({ta}, {tb})"));
                }
                let is_mul = matches!(self, Expr::Mul(..));
                let is_div = matches!(self, Expr::Div(..));
                Ok(match (ta, tb) {
                    (SemType::Any, _) | (_, SemType::Any) => SemType::Any,
                    (SemType::Quantity, SemType::Quantity) if is_mul => {
                        return Err("cannot multiply two quantities".into())
                    }
                    (SemType::Quantity, SemType::Quantity) if is_div => SemType::Decimal,
                    (SemType::Quantity, _) | (_, SemType::Quantity) => SemType::Quantity,
                    (SemType::Integer, SemType::Integer) if !is_div => SemType::Integer,
                    _ => SemType::Decimal,
                })
            }
        }
    }

    pub fn eval<L: FieldLookup + ?Sized>(&self, row: &L) -> FieldValue {
        match self {
            Expr::Field(f) => row
                .field(f)
                .unwrap_or_else(|| FieldValue::missing(format!("no field {f}"))),
            Expr::Const(v) => v.clone(),
            Expr::Add(a, b) => arith(Op::Add, a.eval(row), b.eval(row)),
            Expr::Sub(a, b) => arith(Op::Sub, a.eval(row), b.eval(row)),
            Expr::Mul(a, b) => arith(Op::Mul, a.eval(row), b.eval(row)),
            Expr::Div(a, b) => arith(Op::Div, a.eval(row), b.eval(row)),
        }
    }
}

pub fn type_of(v: &FieldValue) -> SemType {
    match v {
        FieldValue::Integer(_) => SemType::Integer,
        FieldValue::Decimal(_) => SemType::Decimal,
        FieldValue::Text(_) => SemType::Text,
        FieldValue::Quantity { .. } => SemType::Quantity,
        FieldValue::Summary(_) => SemType::Summary,
        FieldValue::Missing(_) => SemType::Any,
    }
}

#[derive(Clone, Copy)]
enum Op {
    Add,
    Sub,
    Mul,
    Div,
}

fn arith(op: Op, a: FieldValue, b: FieldValue) -> FieldValue {
    if let FieldValue::Missing(r) = a {
        return FieldValue::Missing(r);
    }
    if let FieldValue::Missing(r) = b {
        return FieldValue::Missing(r);
    }
    if let (FieldValue::Integer(x), FieldValue::Integer(y)) = (&a, &b) {
        let r = match op {
            Op::Add => x.checked_add(*y),
            Op::Sub => x.checked_sub(*y),
            Op::Mul => x.checked_mul(*y),
            Op::Div => None,
        };
        match (op, r) {
            (Op::Div, _) => {}
            (_, Some(v)) => return FieldValue::Integer(v),
            (_, None) => return FieldValue::missing("overflow"),
        }
    }
    let (Some((x, ua)), Some((y, ub))) = (a.as_amount(), b.as_amount()) else {
        return FieldValue::missing(format!("type error: {a} with {b}"));
    };
    let (value, unit) = match op {
        Op::Add | Op::Sub => {
            if ua != ub {
                return FieldValue::missing(format!("unit mismatch: {ua} vs {ub}"));
            }
            let v = if matches!(op, Op::Add) {
                x.checked_add(y)
            } else {
                x.checked_sub(y)
            };
            (v, ua)
        }
        Op::Mul => {
            if !ua.is_empty() && !ub.is_empty() {
                return FieldValue::missing(format!("cannot multiply {ua} by {ub}"));
            }
            (x.checked_mul(y), if ua.is_empty() { ub } else { ua })
        }
        Op::Div => {
            let unit = match (ua.is_empty(), ub.is_empty()) {
                (_, true) => ua,
                (false, false) if ua == ub => "",
                _ => return FieldValue::missing(format!("cannot divide {ua} by {ub}")),
            };
            match x.checked_div(y) {
                Ok(v) => (Some(v), unit),
                Err(e) => return FieldValue::missing(e.to_string()),
            }
        }
    };
    match value {
        None => FieldValue::missing("overflow"),
        Some(v) if unit.is_empty() => FieldValue::Decimal(v),
        Some(v) => FieldValue::quantity(v, unit),
    }
}

/// Result of a predicate under three-valued logic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Truth {
    True,
    False,
    Unknown(String),
}

impl Truth {
    pub fn holds(&self) -> bool {
        matches!(self, Truth::True)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predicate {
    True,
    False,
    Eq(Expr, Expr),
    Ne(Expr, Expr),
    Lt(Expr, Expr),
    Le(Expr, Expr),
    Gt(Expr, Expr),
    Ge(Expr, Expr),
    And(Vec<Predicate>),
    Or(Vec<Predicate>),
    Not(Box<Predicate>),
    /// True when the value is not `Missing`; never unknown.
    IsPresent(Expr),
}

impl Predicate {
    pub fn eq(a: Expr, b: Expr) -> Self {
        Predicate::Eq(a, b)
    }

    pub fn present(field: impl Into<String>) -> Self {
        Predicate::IsPresent(Expr::field(field))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(p: Predicate) -> Self {
        Predicate::Not(Box::new(p))
    }

    pub fn fields(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect_fields(&mut out);
        out
    }

    fn collect_fields<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            Predicate::True | Predicate::False => {}
            Predicate::Eq(a, b)
            | Predicate::Ne(a, b)
            | Predicate::Lt(a, b)
            | Predicate::Le(a, b)
            | Predicate::Gt(a, b)
            | Predicate::Ge(a, b) => {
                a.collect_fields(out);
                b.collect_fields(out);
            }
            Predicate::And(ps) | Predicate::Or(ps) => {
                for p in ps {
                    p.collect_fields(out);
                }
            }
            Predicate::Not(p) => p.collect_fields(out),
            Predicate::IsPresent(e) => e.collect_fields(out),
        }
    }

    /// Checks that every referenced field exists.
    pub fn check(&self, schema: &Schema) -> Result<(), String> {
        for f in self.fields() {
            if !schema.contains(f) {
                return Err(format!("unknown field `{f}`"));
            }
        }
        Ok(())
    }

    pub fn eval<L: FieldLookup + ?Sized>(&self, row: &L) -> Truth {
        match self {
            Predicate::True => Truth::True,
            Predicate::False => Truth::False,
            Predicate::Eq(a, b) => compare(a.eval(row), b.eval(row), |o| o == Ordering::Equal),
            Predicate::Ne(a, b) => compare(a.eval(row), b.eval(row), |o| o != Ordering::Equal),
            Predicate::Lt(a, b) => compare(a.eval(row), b.eval(row), |o| o == Ordering::Less),
            Predicate::Le(a, b) => compare(a.eval(row), b.eval(row), |o| o != Ordering::Greater),
            Predicate::Gt(a, b) => compare(a.eval(row), b.eval(row), |o| o == Ordering::Greater),
            Predicate::Ge(a, b) => compare(a.eval(row), b.eval(row), |o| o != Ordering::Less),
            Predicate::And(ps) => {
                let mut unknown = None;
                for p in ps {
                    match p.eval(row) {
                        Truth::False => return Truth::False,
                        Truth::Unknown(r) => {
                            unknown.get_or_insert(r);
                        }
                        Truth::True => {}
                    }
                }
                unknown.map_or(Truth::True, Truth::Unknown)
            }
            Predicate::Or(ps) => {
                let mut unknown = None;
                for p in ps {
                    match p.eval(row) {
                        Truth::True => return Truth::True,
                        Truth::Unknown(r) => {
                            unknown.get_or_insert(r);
                        }
                        Truth::False => {}
                    }
                }
                unknown.map_or(Truth::False, Truth::Unknown)
            }
            Predicate::Not(p) => match p.eval(row) {
                Truth::True => Truth::False,
                Truth::False => Truth::True,
                u => u,
            },
            Predicate::IsPresent(e) => {
                if e.eval(row).is_missing() {
                    Truth::False
                } else {
                    Truth::True
                }
            }
        }
    }
}

/// Orders two values of compatible types; `None` when incomparable.
pub fn value_cmp(a: &FieldValue, b: &FieldValue) -> Option<Ordering> {
    match (a, b) {
        (FieldValue::Text(x), FieldValue::Text(y)) => Some(x.cmp(y)),
        (FieldValue::Summary(x), FieldValue::Summary(y)) if x.kind() == y.kind() => Some(x.cmp(y)),
        _ => {
            let (x, ua) = a.as_amount()?;
            let (y, ub) = b.as_amount()?;
            (ua == ub).then(|| x.cmp(&y))
        }
    }
}

fn compare(a: FieldValue, b: FieldValue, test: impl Fn(Ordering) -> bool) -> Truth {
    if let FieldValue::Missing(r) = &a {
        return Truth::Unknown(r.clone());
    }
    if let FieldValue::Missing(r) = &b {
        return Truth::Unknown(r.clone());
    }
    match value_cmp(&a, &b) {
        Some(o) => {
            if test(o) {
                Truth::True
            } else {
                Truth::False
            }
        }
        None => Truth::Unknown(format!("incomparable: {a} and {b}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decimal::Decimal;
    use crate::relation::row;

    fn d(s: &str) -> Decimal {
        s.parse().unwrap()
    }

    #[test]
    fn total_price_of_nutella() {
        let r = row([
            ("Purchase price", FieldValue::quantity(d("10"), "USD")),
            ("Quantity", FieldValue::Decimal(d("20000000"))),
        ]);
        let e = Expr::mul(Expr::field("Purchase price"), Expr::field("Quantity"));
        assert_eq!(e.eval(&r), FieldValue::quantity(d("200000000"), "USD"));
    }

    #[test]
    fn missing_propagates_with_reason() {
        let r = row([
            ("price", FieldValue::missing("unknown")),
            ("qty", FieldValue::Integer(3)),
        ]);
        let e = Expr::mul(Expr::field("price"), Expr::field("qty"));
        assert_eq!(e.eval(&r), FieldValue::missing("unknown"));
    }

    #[test]
    fn unit_conflicts_become_missing() {
        let r = row([
            ("a", FieldValue::quantity(d("1"), "USD")),
            ("b", FieldValue::quantity(d("1"), "EUR")),
        ]);
        assert!(Expr::add(Expr::field("a"), Expr::field("b")).eval(&r).is_missing());
        assert!(Expr::mul(Expr::field("a"), Expr::field("b")).eval(&r).is_missing());
        assert_eq!(
            Expr::div(Expr::field("a"), Expr::field("a")).eval(&r),
            FieldValue::Decimal(d("1"))
        );
        assert!(Expr::div(Expr::field("a"), Expr::lit(0i64)).eval(&r).is_missing());
    }

    #[test]
    fn integer_arithmetic_stays_integral() {
        let r = row([("a", 7i64), ("b", 2i64)]);
        assert_eq!(Expr::add(Expr::field("a"), Expr::field("b")).eval(&r), FieldValue::Integer(9));
        assert_eq!(
            Expr::div(Expr::field("a"), Expr::field("b")).eval(&r),
            FieldValue::Decimal(d("3.5"))
        );
    }

    #[test]
    fn three_valued_logic() {
        let r = row([("a", FieldValue::missing("closed")), ("b", FieldValue::Integer(1))]);
        let unknown = Predicate::eq(Expr::field("a"), Expr::lit(1i64));
        assert_eq!(unknown.eval(&r), Truth::Unknown("closed".into()));
        let f = Predicate::eq(Expr::field("b"), Expr::lit(2i64));
        assert_eq!(Predicate::And(vec![unknown.clone(), f.clone()]).eval(&r), Truth::False);
        assert_eq!(
            Predicate::Or(vec![unknown.clone(), f]).eval(&r),
            Truth::Unknown("closed".into())
        );
        assert_eq!(Predicate::not(unknown).eval(&r), Truth::Unknown("closed".into()));
        assert_eq!(Predicate::present("a").eval(&r), Truth::False);
    }

    #[test]
    fn numeric_comparison_across_int_and_decimal() {
        let r = row([("a", FieldValue::Integer(1)), ("b", FieldValue::Decimal(d("1.0")))]);
        assert!(Predicate::eq(Expr::field("a"), Expr::field("b")).eval(&r).holds());
        let t = row([("a", FieldValue::text("x"))]);
        assert!(matches!(
            Predicate::eq(Expr::field("a"), Expr::lit(1i64)).eval(&t),
            Truth::Unknown(_)
        ));
    }

    #[test]
    fn inference() {
        let s = Schema::of(&[
            ("p", SemType::Quantity),
            ("q", SemType::Decimal),
            ("i", SemType::Integer),
            ("t", SemType::Text),
        ]);
        assert_eq!(Expr::mul(Expr::field("p"), Expr::field("q")).infer(&s), Ok(SemType::Quantity));
        assert_eq!(Expr::add(Expr::field("i"), Expr::field("i")).infer(&s), Ok(SemType::Integer));
        assert_eq!(Expr::div(Expr::field("i"), Expr::field("i")).infer(&s), Ok(SemType::Decimal));
        assert!(Expr::add(Expr::field("t"), Expr::field("i")).infer(&s).is_err());
        assert!(Expr::field("zz").infer(&s).is_err());
    }

    #[test]
    fn predicates_roundtrip_through_json() {
        let p = Predicate::And(vec![
            Predicate::eq(Expr::field("Market"), Expr::lit("spot")),
            Predicate::present("Price"),
        ]);
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(serde_json::from_str::<Predicate>(&s).unwrap(), p);
    }
}
