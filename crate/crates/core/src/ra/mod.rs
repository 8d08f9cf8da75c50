//! Relational algebra: an expression tree, its translation into lossless
//! pipeline graphs, and a brute-force evaluator used as an oracle.

mod check;
mod gen;
mod reference;
mod translate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::Predicate;
use crate::ops::{self, AggSpec, FieldDef};
use crate::relation::Schema;

pub use check::{fuzz_spaces, equivalence_check, equivalence_check_with, Equivalence};
pub use gen::{random_case, random_case_with, Case, GenConfig};
pub use reference::reference_eval;
pub use translate::{translate, translate_with, Mutant, TranslatedQuery, RESULT_SINK};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RAExpr {
    Base {
        name: String,
    },
    Project {
        fields: Vec<String>,
        input: Box<RAExpr>,
    },
    Select {
        predicate: Predicate,
        input: Box<RAExpr>,
    },
    Rename {
        mapping: BTreeMap<String, String>,
        input: Box<RAExpr>,
    },
    CrossProduct {
        left: Box<RAExpr>,
        right: Box<RAExpr>,
    },
    NaturalJoin {
        left: Box<RAExpr>,
        right: Box<RAExpr>,
    },
    /// Full outer join on equality of the paired columns.
    OuterJoin {
        on: Vec<(String, String)>,
        left: Box<RAExpr>,
        right: Box<RAExpr>,
    },
    Union {
        left: Box<RAExpr>,
        right: Box<RAExpr>,
    },
    UnionAll {
        left: Box<RAExpr>,
        right: Box<RAExpr>,
    },
    Minus {
        left: Box<RAExpr>,
        right: Box<RAExpr>,
    },
    Intersect {
        left: Box<RAExpr>,
        right: Box<RAExpr>,
    },
    Aggregate {
        #[serde(default)]
        group_by: Vec<String>,
        specs: Vec<AggSpec>,
        input: Box<RAExpr>,
    },
    Map {
        fields: Vec<FieldDef>,
        input: Box<RAExpr>,
    },
}

/// The twelve operator kinds (everything except base relations).
pub const OPERATOR_KINDS: [&str; 12] = [
    "project",
    "select",
    "rename",
    "cross_product",
    "natural_join",
    "outer_join",
    "union",
    "union_all",
    "minus",
    "intersect",
    "aggregate",
    "map",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("type error at {path}: {detail}")]
pub struct TypeError {
    pub path: String,
    pub detail: String,
}

impl RAExpr {
    pub fn base(name: &str) -> Self {
        RAExpr::Base { name: name.into() }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            RAExpr::Base { .. } => "base",
            RAExpr::Project { .. } => "project",
            RAExpr::Select { .. } => "select",
            RAExpr::Rename { .. } => "rename",
            RAExpr::CrossProduct { .. } => "cross_product",
            RAExpr::NaturalJoin { .. } => "natural_join",
            RAExpr::OuterJoin { .. } => "outer_join",
            RAExpr::Union { .. } => "union",
            RAExpr::UnionAll { .. } => "union_all",
            RAExpr::Minus { .. } => "minus",
            RAExpr::Intersect { .. } => "intersect",
            RAExpr::Aggregate { .. } => "aggregate",
            RAExpr::Map { .. } => "map",
        }
    }

    pub fn children(&self) -> Vec<&RAExpr> {
        match self {
            RAExpr::Base { .. } => vec![],
            RAExpr::Project { input, .. }
            | RAExpr::Select { input, .. }
            | RAExpr::Rename { input, .. }
            | RAExpr::Aggregate { input, .. }
            | RAExpr::Map { input, .. } => vec![input],
            RAExpr::CrossProduct { left, right }
            | RAExpr::NaturalJoin { left, right }
            | RAExpr::OuterJoin { left, right, .. }
            | RAExpr::Union { left, right }
            | RAExpr::UnionAll { left, right }
            | RAExpr::Minus { left, right }
            | RAExpr::Intersect { left, right } => vec![left, right],
        }
    }

    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    /// Every node kind occurring in the tree.
    pub fn kinds(&self) -> BTreeSet<&'static str> {
        let mut out = BTreeSet::from([self.kind()]);
        for c in self.children() {
            out.extend(c.kinds());
        }
        out
    }

    /// Output schema, or the first type error with the path to the node.
    pub fn typecheck(&self, bases: &BTreeMap<String, Schema>) -> Result<Schema, TypeError> {
        self.check_at(bases, self.kind())
    }

    fn check_at(&self, bases: &BTreeMap<String, Schema>, path: &str) -> Result<Schema, TypeError> {
        let fail = |detail: String| TypeError {
            path: path.to_string(),
            detail,
        };
        let sub = |e: &RAExpr, slot: &str| e.check_at(bases, &format!("{path}/{slot}:{}", e.kind()));
        match self {
            RAExpr::Base { name } => bases
                .get(name)
                .cloned()
                .ok_or_else(|| fail(format!("unknown relation `{name}`"))),
            RAExpr::Project { fields, input } => {
                let s = sub(input, "input")?;
                let mut seen = BTreeSet::new();
                for f in fields {
                    if !s.contains(f) {
                        return Err(fail(format!("unknown field `{f}`")));
                    }
                    if !seen.insert(f.as_str()) {
                        return Err(fail(format!("field `{f}` projected twice")));
                    }
                }
                Ok(s.restricted(&seen))
            }
            RAExpr::Select { predicate, input } => {
                let s = sub(input, "input")?;
                predicate.check(&s).map_err(fail)?;
                Ok(s)
            }
            RAExpr::Rename { mapping, input } => {
                let s = sub(input, "input")?;
                ops::rename_schema(&s, mapping).map_err(|e| fail(e.to_string()))
            }
            RAExpr::CrossProduct { left, right } => {
                let (l, r) = (sub(left, "left")?, sub(right, "right")?);
                ops::join_schema(&l, &r, &[]).map_err(|e| fail(e.to_string()))
            }
            RAExpr::NaturalJoin { left, right } => {
                let (l, r) = (sub(left, "left")?, sub(right, "right")?);
                let on = common_fields(&l, &r);
                for (c, _) in &on {
                    check_same_type(&l, c, &r, c).map_err(fail)?;
                }
                ops::join_schema(&l, &r, &on).map_err(|e| fail(e.to_string()))
            }
            RAExpr::OuterJoin { on, left, right } => {
                let (l, r) = (sub(left, "left")?, sub(right, "right")?);
                let out = ops::join_schema(&l, &r, on).map_err(|e| fail(e.to_string()))?;
                for (a, b) in on {
                    check_same_type(&l, a, &r, b).map_err(fail)?;
                }
                Ok(out)
            }
            RAExpr::Union { left, right }
            | RAExpr::UnionAll { left, right }
            | RAExpr::Minus { left, right }
            | RAExpr::Intersect { left, right } => {
                let (l, r) = (sub(left, "left")?, sub(right, "right")?);
                if !l.same_fields(&r) {
                    return Err(fail(format!("incompatible schemas {l} and {r}")));
                }
                for c in l.columns() {
                    check_same_type(&l, &c.name, &r, &c.name).map_err(fail)?;
                }
                Ok(l)
            }
            RAExpr::Aggregate { group_by, specs, input } => {
                let s = sub(input, "input")?;
                ops::aggregate_schema(&s, group_by, specs).map_err(|e| fail(e.to_string()))
            }
            RAExpr::Map { fields, input } => {
                let s = sub(input, "input")?;
                ops::fmap_schema(&s, fields).map_err(|e| fail(e.to_string()))
            }
        }
    }
}

/// Same-named columns of two schemas, as join pairs.
pub(crate) fn common_fields(l: &Schema, r: &Schema) -> Vec<(String, String)> {
    l.names()
        .filter(|n| r.contains(n))
        .map(|n| (n.to_string(), n.to_string()))
        .collect()
}

fn check_same_type(l: &Schema, a: &str, r: &Schema, b: &str) -> Result<(), String> {
    let ca = l.require(a).map_err(|e| e.to_string())?;
    let cb = r.require(b).map_err(|e| e.to_string())?;
    if ca.ty != cb.ty || ca.unit != cb.unit {
        return Err(format!("`{a}` is {} but `{b}` is {}", ca.ty, cb.ty));
    }
    Ok(())
}

impl fmt::Display for RAExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RAExpr::Base { name } => write!(f, "{name}"),
            RAExpr::Project { fields, input } => write!(f, "π[{}]({input})", fields.join(",")),
            RAExpr::Select { predicate, input } => write!(f, "σ[{predicate:?}]({input})"),
            RAExpr::Rename { mapping, input } => {
                let m: Vec<String> = mapping.iter().map(|(a, b)| format!("{a}→{b}")).collect();
                write!(f, "ρ[{}]({input})", m.join(","))
            }
            RAExpr::CrossProduct { left, right } => write!(f, "({left} × {right})"),
            RAExpr::NaturalJoin { left, right } => write!(f, "({left} ⋈ {right})"),
            RAExpr::OuterJoin { on, left, right } => {
                let c: Vec<String> = on.iter().map(|(a, b)| format!("{a}={b}")).collect();
                write!(f, "({left} ⟗[{}] {right})", c.join(","))
            }
            RAExpr::Union { left, right } => write!(f, "({left} ∪ {right})"),
            RAExpr::UnionAll { left, right } => write!(f, "({left} ⊎ {right})"),
            RAExpr::Minus { left, right } => write!(f, "({left} − {right})"),
            RAExpr::Intersect { left, right } => write!(f, "({left} ∩ {right})"),
            RAExpr::Aggregate { group_by, specs, input } => {
                let s: Vec<String> = specs.iter().map(|s| format!("{}({})", s.kind, s.field)).collect();
                write!(f, "γ[{}; {}]({input})", group_by.join(","), s.join(","))
            }
            RAExpr::Map { fields, input } => {
                let s: Vec<&str> = fields.iter().map(|d| d.name.as_str()).collect();
                write!(f, "map[{}]({input})", s.join(","))
            }
        }
    }
}
