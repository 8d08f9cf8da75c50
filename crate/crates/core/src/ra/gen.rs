//! Seeded random relations and well-typed expressions over them.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::decimal::Decimal;
use crate::expr::{Expr, Predicate};
use crate::ops::{AggKind, AggSpec, FieldDef};
use crate::ra::{RAExpr, OPERATOR_KINDS};
use crate::relation::{ingest_with, Column, PidAllocator, Relation, Schema, SemType};
use crate::value::FieldValue;

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub relations: usize,
    pub max_rows: usize,
    pub max_columns: usize,
    pub max_depth: usize,
    pub missing_rate: f64,
    /// Upper bound on the estimated size of any intermediate result.
    pub max_cardinality: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            relations: 3,
            max_rows: 50,
            max_columns: 5,
            max_depth: 4,
            missing_rate: 0.1,
            max_cardinality: 5000,
        }
    }
}

/// A generated test case: base relations and an expression over them.
#[derive(Debug, Clone)]
pub struct Case {
    pub seed: u64,
    pub bases: BTreeMap<String, Relation>,
    pub expr: RAExpr,
}

/// Column pool. A name always carries the same type, so natural joins find
/// well-typed common fields.
const POOL: [(&str, SemType); 7] = [
    ("a", SemType::Integer),
    ("b", SemType::Text),
    ("c", SemType::Integer),
    ("d", SemType::Quantity),
    ("e", SemType::Text),
    ("f", SemType::Decimal),
    ("g", SemType::Integer),
];

const TEXTS: [&str; 4] = ["x", "y", "z", "w"];

pub fn random_case(seed: u64) -> Case {
    random_case_with(seed, &GenConfig::default())
}

pub fn random_case_with(seed: u64, cfg: &GenConfig) -> Case {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        cfg: cfg.clone(),
        bases: BTreeMap::new(),
        sizes: BTreeMap::new(),
        fresh: 0,
    };
    let mut alloc = PidAllocator::new();
    let mut relations = BTreeMap::new();
    for i in 0..cfg.relations.max(1) {
        let name = format!("r{i}");
        let rel = g.relation(&mut alloc);
        g.bases.insert(name.clone(), rel.schema().clone());
        g.sizes.insert(name.clone(), rel.len());
        relations.insert(name, rel);
    }
    let depth = g.rng.gen_range(1..=cfg.max_depth.max(1));
    let (expr, _) = g.expr(depth);
    Case {
        seed,
        bases: relations,
        expr,
    }
}

struct Gen {
    rng: ChaCha8Rng,
    cfg: GenConfig,
    bases: BTreeMap<String, Schema>,
    sizes: BTreeMap<String, usize>,
    fresh: usize,
}

type Typed = (RAExpr, Schema);

impl Gen {
    fn relation(&mut self, alloc: &mut PidAllocator) -> Relation {
        let ncols = self.rng.gen_range(1..=self.cfg.max_columns.clamp(1, POOL.len()));
        let mut pool = POOL.to_vec();
        pool.shuffle(&mut self.rng);
        pool.truncate(ncols);
        pool.sort_by_key(|(n, _)| *n);
        let columns: Vec<Column> = pool
            .iter()
            .map(|(n, t)| {
                let c = Column::new(*n, *t);
                if *t == SemType::Quantity {
                    c.with_unit("kg")
                } else {
                    c
                }
            })
            .collect();
        let schema = Schema::new(columns).expect("distinct pool names");
        // Skew towards small relations so joins stay small.
        let r: f64 = self.rng.gen();
        let nrows = ((r * r) * (self.cfg.max_rows as f64 + 1.0)) as usize;
        let rows = (0..nrows.min(self.cfg.max_rows))
            .map(|_| {
                pool.iter()
                    .map(|(n, t)| (n.to_string(), self.value(*t)))
                    .collect()
            })
            .collect();
        ingest_with(alloc, schema, rows).expect("generated values fit their columns")
    }

    fn value(&mut self, ty: SemType) -> FieldValue {
        if self.rng.gen_bool(self.cfg.missing_rate) {
            return FieldValue::missing(if self.rng.gen_bool(0.5) { "unknown" } else { "empty" });
        }
        self.constant(ty)
    }

    fn small(&mut self) -> i64 {
        // Skewed: low values are much more frequent.
        let x: f64 = self.rng.gen();
        (x * x * 5.0) as i64
    }

    fn constant(&mut self, ty: SemType) -> FieldValue {
        match ty {
            SemType::Integer => FieldValue::Integer(self.small()),
            SemType::Decimal => {
                let n = self.small();
                let half = if self.rng.gen_bool(0.5) { ".5" } else { "" };
                FieldValue::Decimal(format!("{n}{half}").parse().expect("valid decimal"))
            }
            SemType::Text => FieldValue::text(*TEXTS[..3].choose(&mut self.rng).expect("nonempty")),
            SemType::Quantity => {
                let unit = if self.rng.gen_bool(0.9) { "kg" } else { "g" };
                FieldValue::quantity(Decimal::from(self.small()), unit)
            }
            _ => FieldValue::missing("unknown"),
        }
    }

    fn fresh_name(&mut self, prefix: &str) -> String {
        self.fresh += 1;
        format!("{prefix}{}", self.fresh)
    }

    fn estimate(&self, e: &RAExpr) -> usize {
        match e {
            RAExpr::Base { name } => self.sizes[name],
            RAExpr::Project { input, .. }
            | RAExpr::Select { input, .. }
            | RAExpr::Rename { input, .. }
            | RAExpr::Aggregate { input, .. }
            | RAExpr::Map { input, .. } => self.estimate(input),
            RAExpr::CrossProduct { left, right }
            | RAExpr::NaturalJoin { left, right }
            | RAExpr::OuterJoin { left, right, .. } => {
                let (l, r) = (self.estimate(left), self.estimate(right));
                l * r + l + r
            }
            RAExpr::Union { left, right }
            | RAExpr::UnionAll { left, right }
            | RAExpr::Minus { left, right }
            | RAExpr::Intersect { left, right } => self.estimate(left) + self.estimate(right),
        }
    }

    fn base(&mut self) -> Typed {
        let names: Vec<&String> = self.bases.keys().collect();
        let name = (*names.choose(&mut self.rng).expect("at least one base")).clone();
        let s = self.bases[&name].clone();
        (RAExpr::base(&name), s)
    }

    fn expr(&mut self, depth: usize) -> Typed {
        if depth == 0 {
            return self.base();
        }
        for _ in 0..8 {
            let kind = *OPERATOR_KINDS.choose(&mut self.rng).expect("nonempty");
            if let Some(e) = self.operator(kind, depth) {
                if let Ok(s) = e.typecheck(&self.bases) {
                    if e.depth() <= depth + 1 && self.estimate(&e) <= self.cfg.max_cardinality {
                        return (e, s);
                    }
                }
            }
        }
        self.base()
    }

    fn child(&mut self, depth: usize) -> Typed {
        let d = self.rng.gen_range(0..depth);
        self.expr(d)
    }

    fn operator(&mut self, kind: &str, depth: usize) -> Option<RAExpr> {
        Some(match kind {
            "project" => {
                let (input, s) = self.child(depth);
                let mut fields: Vec<String> = s
                    .names()
                    .filter(|_| self.rng.gen_bool(0.6))
                    .map(String::from)
                    .collect();
                if fields.is_empty() {
                    fields.push(s.columns()[0].name.clone());
                }
                RAExpr::Project {
                    fields,
                    input: Box::new(input),
                }
            }
            "select" => {
                let (input, s) = self.child(depth);
                RAExpr::Select {
                    predicate: self.predicate(&s, 2),
                    input: Box::new(input),
                }
            }
            "rename" => {
                let (input, s) = self.child(depth);
                let from = s.columns().choose(&mut self.rng)?.name.clone();
                let to = self.fresh_name(&from);
                RAExpr::Rename {
                    mapping: BTreeMap::from([(from, to)]),
                    input: Box::new(input),
                }
            }
            "cross_product" => {
                let (left, ls) = self.child(depth);
                let (right, rs) = self.child(depth);
                let right = self.rename_clashes(right, &rs, &ls, &BTreeSet::new());
                RAExpr::CrossProduct {
                    left: Box::new(left),
                    right: Box::new(right),
                }
            }
            "natural_join" => {
                let (left, _) = self.child(depth);
                let (right, _) = self.child(depth);
                RAExpr::NaturalJoin {
                    left: Box::new(left),
                    right: Box::new(right),
                }
            }
            "outer_join" => {
                let (left, ls) = self.child(depth);
                let (right, rs) = self.child(depth);
                let pairs: Vec<(String, String)> = ls
                    .columns()
                    .iter()
                    .flat_map(|a| {
                        rs.columns()
                            .iter()
                            .filter(move |b| a.ty == b.ty && a.unit == b.unit && a.ty != SemType::Summary)
                            .map(move |b| (a.name.clone(), b.name.clone()))
                    })
                    .collect();
                let on: Vec<(String, String)> = pairs.choose(&mut self.rng).cloned().into_iter().collect();
                let keep: BTreeSet<String> = on.iter().filter(|(a, b)| a == b).map(|(a, _)| a.clone()).collect();
                let right = self.rename_clashes(right, &rs, &ls, &keep);
                RAExpr::OuterJoin {
                    on,
                    left: Box::new(left),
                    right: Box::new(right),
                }
            }
            "union" | "union_all" | "minus" | "intersect" => {
                let (left, ls) = self.child(depth);
                let right = match self.rng.gen_range(0..3) {
                    0 => left.clone(),
                    _ => RAExpr::Select {
                        predicate: self.predicate(&ls, 1),
                        input: Box::new(left.clone()),
                    },
                };
                let (left, right) = (Box::new(left), Box::new(right));
                match kind {
                    "union" => RAExpr::Union { left, right },
                    "union_all" => RAExpr::UnionAll { left, right },
                    "minus" => RAExpr::Minus { left, right },
                    _ => RAExpr::Intersect { left, right },
                }
            }
            "aggregate" => {
                let (input, s) = self.child(depth);
                let plain: Vec<&Column> = s.columns().iter().filter(|c| c.ty != SemType::Summary).collect();
                let numeric: Vec<&Column> = plain.iter().copied().filter(|c| c.ty.is_numeric()).collect();
                let group_by: Vec<String> = plain
                    .iter()
                    .filter(|_| self.rng.gen_bool(0.3))
                    .take(2)
                    .map(|c| c.name.clone())
                    .collect();
                let mut specs = Vec::new();
                for _ in 0..self.rng.gen_range(1..=2) {
                    let kinds = [
                        AggKind::Count,
                        AggKind::Sum,
                        AggKind::Min,
                        AggKind::Max,
                        AggKind::Avg,
                        AggKind::SetOfIds,
                        AggKind::Paccioli,
                    ];
                    let k = *kinds.choose(&mut self.rng).expect("nonempty");
                    let pool = if k.needs_amount() { &numeric } else { &plain };
                    if let Some(c) = pool.choose(&mut self.rng) {
                        let spec = AggSpec::new(k, c.name.clone());
                        if !specs.iter().any(|x: &AggSpec| x.output_name() == spec.output_name()) {
                            specs.push(spec);
                        }
                    }
                }
                if specs.is_empty() {
                    return None;
                }
                RAExpr::Aggregate {
                    group_by,
                    specs,
                    input: Box::new(input),
                }
            }
            "map" => {
                let (input, s) = self.child(depth);
                let numeric: Vec<&Column> = s.columns().iter().filter(|c| c.ty.is_numeric()).collect();
                let c = numeric.choose(&mut self.rng)?;
                let x = Expr::field(c.name.clone());
                let k = Expr::lit(self.rng.gen_range(1..4i64));
                let expr = match self.rng.gen_range(0..3) {
                    0 => Expr::add(x, k),
                    1 => Expr::mul(x, k),
                    _ => Expr::sub(x.clone(), x),
                };
                RAExpr::Map {
                    fields: vec![FieldDef::new(self.fresh_name("m"), expr)],
                    input: Box::new(input),
                }
            }
            _ => return None,
        })
    }

    /// Renames fields of `rs` that collide with `ls`, except those in `keep`.
    fn rename_clashes(&mut self, right: RAExpr, rs: &Schema, ls: &Schema, keep: &BTreeSet<String>) -> RAExpr {
        let mapping: BTreeMap<String, String> = rs
            .names()
            .filter(|n| ls.contains(n) && !keep.contains(*n))
            .map(String::from)
            .collect::<Vec<_>>()
            .into_iter()
            .map(|n| {
                let to = self.fresh_name(&n);
                (n, to)
            })
            .collect();
        if mapping.is_empty() {
            right
        } else {
            RAExpr::Rename {
                mapping,
                input: Box::new(right),
            }
        }
    }

    fn predicate(&mut self, s: &Schema, depth: usize) -> Predicate {
        let cols: Vec<Column> = s.columns().iter().filter(|c| c.ty != SemType::Summary).cloned().collect();
        let Some(c) = cols.choose(&mut self.rng).cloned() else {
            return Predicate::True;
        };
        if depth > 0 && self.rng.gen_bool(0.25) {
            let a = self.predicate(s, depth - 1);
            let b = self.predicate(s, depth - 1);
            return match self.rng.gen_range(0..3) {
                0 => Predicate::And(vec![a, b]),
                1 => Predicate::Or(vec![a, b]),
                _ => Predicate::Not(Box::new(a)),
            };
        }
        let x = Expr::field(c.name.clone());
        if self.rng.gen_bool(0.15) {
            return Predicate::IsPresent(x);
        }
        let k = Expr::Const(self.constant(c.ty));
        match self.rng.gen_range(0..6) {
            0 => Predicate::Eq(x, k),
            1 => Predicate::Ne(x, k),
            2 => Predicate::Lt(x, k),
            3 => Predicate::Le(x, k),
            4 => Predicate::Gt(x, k),
            _ => Predicate::Ge(x, k),
        }
    }
}
