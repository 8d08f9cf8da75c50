#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use data_accounting::monoid::{Extreme, InformationMonoid, MonoidElement, MonoidKind};
use data_accounting::{Decimal, FieldValue};
use rand::Rng;

pub fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

pub fn kinds() -> Vec<MonoidKind> {
    vec![
        MonoidKind::Count,
        MonoidKind::Sum("USD".into()),
        MonoidKind::Min("kg".into()),
        MonoidKind::Max("kg".into()),
        MonoidKind::Avg("kg".into()),
        MonoidKind::SetOfIds,
        MonoidKind::Paccioli,
        MonoidKind::Tuple(vec![MonoidKind::Count, MonoidKind::Paccioli, MonoidKind::SetOfIds]),
    ]
}

fn decimal(rng: &mut impl Rng, signed: bool) -> Decimal {
    let whole: i64 = rng.gen_range(0..1_000_000);
    let frac: u32 = rng.gen_range(0..10_000);
    let sign = if signed && rng.gen_bool(0.5) { "-" } else { "" };
    format!("{sign}{whole}.{frac:04}").parse().expect("four decimal places")
}

fn extreme(rng: &mut impl Rng) -> Extreme {
    if rng.gen_bool(0.1) {
        Extreme::Unbounded
    } else {
        Extreme::Value(decimal(rng, true))
    }
}

/// A random element; `grow_only` keeps signed sums non-negative so the
/// element can serve as an information increment.
pub fn element(kind: &MonoidKind, rng: &mut impl Rng, grow_only: bool) -> MonoidElement {
    if rng.gen_bool(0.05) {
        return kind.unit();
    }
    match kind {
        MonoidKind::Count => MonoidElement::Count(rng.gen_range(0..1_000_000)),
        MonoidKind::Sum(u) => MonoidElement::sum(u.clone(), decimal(rng, !grow_only)),
        MonoidKind::Min(u) => MonoidElement::Min {
            unit: u.clone(),
            value: extreme(rng),
        },
        MonoidKind::Max(u) => MonoidElement::Max {
            unit: u.clone(),
            value: extreme(rng),
        },
        MonoidKind::Avg(u) => {
            MonoidElement::avg(u.clone(), decimal(rng, true), rng.gen_range(1..1000)).expect("positive count")
        }
        MonoidKind::SetOfIds => {
            let n = rng.gen_range(0..6);
            MonoidElement::SetOfIds((0..n).map(|_| FieldValue::Integer(rng.gen_range(0..20))).collect::<BTreeSet<_>>())
        }
        MonoidKind::Paccioli => MonoidElement::paccioli(decimal(rng, false), decimal(rng, false)).expect("non-negative"),
        MonoidKind::Tuple(ks) => MonoidElement::Tuple(ks.iter().map(|k| element(k, rng, grow_only)).collect()),
    }
}

fn ensure(ok: bool, law: &str) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(law.to_string())
    }
}

/// Monoid laws plus the order laws of `m`. `x` and `y` are increments used
/// to build ordered pairs for the monotonicity law `a ⋄ c ≤ b ⋄ d`.
pub fn check_laws(
    m: &InformationMonoid,
    a: &MonoidElement,
    b: &MonoidElement,
    c: &MonoidElement,
    x: &MonoidElement,
    y: &MonoidElement,
) -> Result<(), String> {
    let f = |p: &MonoidElement, q: &MonoidElement| m.fuse(p, q).map_err(|e| e.to_string());
    let le = |p: &MonoidElement, q: &MonoidElement| m.leq(p, q).map_err(|e| e.to_string());
    let e = m.unit();

    ensure(f(&f(a, b)?, c)? == f(a, &f(b, c)?)?, "associativity")?;
    ensure(f(&e, a)? == *a && f(a, &e)? == *a, "identity")?;
    ensure(f(a, b)? == f(b, a)?, "commutativity")?;
    ensure(le(a, a)?, "reflexivity")?;
    if le(a, b)? && le(b, a)? {
        ensure(a == b, "antisymmetry")?;
    }

    // Ordered pairs: p ≤ q by construction.
    let grow = |base: &MonoidElement, inc: &MonoidElement| f(base, inc);
    let (lo_ab, hi_ab, lo_cd, hi_cd) = if m.derived_order_flag() {
        // Fusion is a lower bound: base ⋄ inc ≤ base.
        (grow(a, x)?, a.clone(), grow(c, y)?, c.clone())
    } else {
        (a.clone(), grow(a, x)?, c.clone(), grow(c, y)?)
    };
    ensure(le(&lo_ab, &hi_ab)? && le(&lo_cd, &hi_cd)?, "fusion moves along the order")?;
    ensure(le(&f(&lo_ab, &lo_cd)?, &f(&hi_ab, &hi_cd)?)?, "monotonicity")?;

    if m.derived_order_flag() {
        let ab = f(a, b)?;
        ensure(le(&ab, a)? && le(&ab, b)?, "derived: fusion is a lower bound")?;
        ensure(le(a, &e)?, "derived: unit is the top")?;
        ensure(le(&f(&ab, c)?, &ab)? && le(&f(&ab, c)?, a)?, "derived: transitivity")?;
    } else {
        ensure(le(&e, x)?, "growth: unit is the bottom")?;
        let ax = f(a, x)?;
        ensure(le(a, &ax)? && le(&ax, &f(&ax, y)?)? && le(a, &f(&ax, y)?)?, "growth: transitivity")?;
    }
    Ok(())
}

/// Runs `cases` random law checks for `kind` under every order it admits.
pub fn law_suite(kind: &MonoidKind, cases: usize, seed: u64) -> Result<usize, String> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut monoids = vec![InformationMonoid::new(kind.clone())];
    match InformationMonoid::derived(kind.clone()) {
        Ok(m) => monoids.push(m),
        Err(_) => {
            if !matches!(kind, MonoidKind::Sum(_)) {
                return Err(format!("{kind} should admit a derived order"));
            }
        }
    }
    for i in 0..cases {
        let a = element(kind, &mut rng, false);
        let b = element(kind, &mut rng, false);
        let c = element(kind, &mut rng, false);
        let x = element(kind, &mut rng, true);
        let y = element(kind, &mut rng, true);
        for m in &monoids {
            check_laws(m, &a, &b, &c, &x, &y).map_err(|law| format!("{kind} case {i}: {law} ({a}, {b}, {c})"))?;
        }
    }
    Ok(cases)
}
