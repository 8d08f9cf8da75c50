use std::collections::BTreeMap;

use crate::expr::{Expr, Predicate};
use crate::ops::FieldDef;
use crate::pipeline::{Node, Op, PipelineGraph, PortRef, SinkRole, Wire};
use crate::ra::{common_fields, RAExpr, TypeError};
use crate::relation::Schema;
use crate::value::FieldValue;

/// Name of the report sink holding the classical answer.
pub const RESULT_SINK: &str = "result";

/// Deliberately wrong translations, used as negative controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mutant {
    #[default]
    None,
    /// Union keeps duplicates.
    UnionWithoutDedup,
}

/// A translated expression. Each base-relation occurrence gets its own
/// source node, fed from the input named in `occurrences`.
#[derive(Debug, Clone)]
pub struct TranslatedQuery {
    pub graph: PipelineGraph,
    /// `(input name, base relation)` per occurrence, in tree order.
    pub occurrences: Vec<(String, String)>,
}

struct Builder<'a> {
    bases: &'a BTreeMap<String, Schema>,
    mutant: Mutant,
    graph: PipelineGraph,
    occurrences: Vec<(String, String)>,
}

type Port = (PortRef, Schema);

impl Builder<'_> {
    fn add(&mut self, label: &str, op: Op) -> String {
        let name = format!("n{}_{label}", self.graph.nodes.len());
        self.graph.nodes.push(Node::new(name.clone(), op));
        name
    }

    fn wire(&mut self, from: &PortRef, to: &str, port: &str) {
        self.graph
            .wires
            .push(Wire::new(from.clone(), PortRef::new(to, port)));
    }

    fn unary(&mut self, label: &str, op: Op, input: &Port) -> Result<Port, String> {
        let outs = op.infer(&[&input.1])?;
        let n = self.add(label, op);
        self.wire(&input.0, &n, "in");
        Ok((PortRef::new(n, "out"), outs.into_iter().next().expect("one output")))
    }

    fn sink(&mut self, role: SinkRole, from: &PortRef) {
        let label = match role {
            SinkRole::Report => "report",
            SinkRole::Error => "error",
            SinkRole::Auxiliary => "aux",
        };
        let n = self.add(label, Op::Sink { role });
        self.wire(from, &n, "in");
    }

    fn binary(&mut self, label: &str, op: Op, l: &Port, r: &Port) -> Result<(String, Vec<Schema>), String> {
        let outs = op.infer(&[&l.1, &r.1])?;
        let n = self.add(label, op);
        self.wire(&l.0, &n, "left");
        self.wire(&r.0, &n, "right");
        Ok((n, outs))
    }

    fn union_all(&mut self, l: &Port, r: &Port) -> Result<Port, String> {
        let (n, outs) = self.binary("tagged_union", Op::TaggedUnion { label: None }, l, r)?;
        let merged = (PortRef::new(n, "out"), outs[0].clone());
        self.unary("strip_tags", Op::StripTags, &merged)
    }

    /// Splits on whether every key column is present; returns (present, absent).
    fn null_split(&mut self, input: &Port, keys: &[&str]) -> Result<(Port, Port), String> {
        let predicate = Predicate::And(keys.iter().map(|k| Predicate::present(*k)).collect());
        let op = Op::Partition { predicate };
        op.infer(&[&input.1])?;
        let n = self.add("null_split", op);
        self.wire(&input.0, &n, "in");
        Ok((
            (PortRef::new(n.clone(), "accepted"), input.1.clone()),
            (PortRef::new(n, "rejected"), input.1.clone()),
        ))
    }

    /// Adds the columns of `target` missing from `input`, filled with a
    /// missing value.
    fn pad(&mut self, input: &Port, target: &Schema) -> Result<Port, String> {
        let fields: Vec<FieldDef> = target
            .columns()
            .iter()
            .filter(|c| !input.1.contains(&c.name))
            .map(|c| FieldDef {
                name: c.name.clone(),
                expr: Expr::Const(FieldValue::missing("null")),
                ty: Some(c.ty),
            })
            .collect();
        if fields.is_empty() {
            return Ok(input.clone());
        }
        self.unary("pad", Op::Fmap { fields }, input)
    }

    fn go(&mut self, e: &RAExpr) -> Result<Port, String> {
        match e {
            RAExpr::Base { name } => {
                let schema = self
                    .bases
                    .get(name)
                    .cloned()
                    .ok_or_else(|| format!("unknown relation `{name}`"))?;
                let input = format!("{name}#{}", self.occurrences.len());
                self.occurrences.push((input.clone(), name.clone()));
                let n = self.add(
                    "source",
                    Op::Source {
                        input,
                        schema: Some(schema.clone()),
                    },
                );
                Ok((PortRef::new(n, "out"), schema))
            }
            RAExpr::Project { fields, input } => {
                let i = self.go(input)?;
                self.unary("project", Op::Project { keep: fields.clone() }, &i)
            }
            RAExpr::Select { predicate, input } => {
                let i = self.go(input)?;
                let op = Op::Partition {
                    predicate: predicate.clone(),
                };
                op.infer(&[&i.1])?;
                let n = self.add("select", op);
                self.wire(&i.0, &n, "in");
                self.sink(SinkRole::Error, &PortRef::new(n.clone(), "rejected"));
                Ok((PortRef::new(n, "accepted"), i.1))
            }
            RAExpr::Rename { mapping, input } => {
                let i = self.go(input)?;
                self.unary("rename", Op::Rename { mapping: mapping.clone() }, &i)
            }
            RAExpr::CrossProduct { left, right } => {
                let (l, r) = (self.go(left)?, self.go(right)?);
                self.cross(&l, &r)
            }
            RAExpr::NaturalJoin { left, right } => {
                let (l, r) = (self.go(left)?, self.go(right)?);
                let on = common_fields(&l.1, &r.1);
                if on.is_empty() {
                    return self.cross(&l, &r);
                }
                let keys: Vec<&str> = on.iter().map(|(k, _)| k.as_str()).collect();
                let (lp, ln) = self.null_split(&l, &keys)?;
                let (rp, rn) = self.null_split(&r, &keys)?;
                self.sink(SinkRole::Error, &ln.0);
                self.sink(SinkRole::Error, &rn.0);
                let (n, outs) = self.binary("natural_join", Op::OuterJoin { on }, &lp, &rp)?;
                self.sink(SinkRole::Error, &PortRef::new(n.clone(), "left"));
                self.sink(SinkRole::Error, &PortRef::new(n.clone(), "right"));
                Ok((PortRef::new(n, "inner"), outs[0].clone()))
            }
            RAExpr::OuterJoin { on, left, right } => {
                let (l, r) = (self.go(left)?, self.go(right)?);
                let (n, outs) = if on.is_empty() {
                    self.binary("outer_join", Op::OuterJoin { on: vec![] }, &l, &r)?
                } else {
                    let lk: Vec<&str> = on.iter().map(|(a, _)| a.as_str()).collect();
                    let rk: Vec<&str> = on.iter().map(|(_, b)| b.as_str()).collect();
                    let (lp, ln) = self.null_split(&l, &lk)?;
                    let (rp, rn) = self.null_split(&r, &rk)?;
                    let (n, outs) = self.binary("outer_join", Op::OuterJoin { on: on.clone() }, &lp, &rp)?;
                    let target = outs[0].clone();
                    let lnull = self.pad(&ln, &target)?;
                    let rnull = self.pad(&rn, &target)?;
                    let nulls = self.union_all(&lnull, &rnull)?;
                    let inner = (PortRef::new(n.clone(), "inner"), target.clone());
                    let out = self.pad_and_merge(&n, &outs, inner)?;
                    return self.union_all(&out, &nulls);
                };
                let inner = (PortRef::new(n.clone(), "inner"), outs[0].clone());
                self.pad_and_merge(&n, &outs, inner)
            }
            RAExpr::Union { left, right } => {
                let (l, r) = (self.go(left)?, self.go(right)?);
                let u = self.union_all(&l, &r)?;
                match self.mutant {
                    Mutant::UnionWithoutDedup => Ok(u),
                    Mutant::None => self.unary("dedup", Op::Dedup, &u),
                }
            }
            RAExpr::UnionAll { left, right } => {
                let (l, r) = (self.go(left)?, self.go(right)?);
                self.union_all(&l, &r)
            }
            RAExpr::Minus { left, right } => {
                let (l, r) = (self.go(left)?, self.go(right)?);
                let (n, outs) = self.binary("minus", Op::Membership, &l, &r)?;
                self.sink(SinkRole::Error, &PortRef::new(n.clone(), "left_shared"));
                self.sink(SinkRole::Auxiliary, &PortRef::new(n.clone(), "right_shared"));
                self.sink(SinkRole::Auxiliary, &PortRef::new(n.clone(), "right_only"));
                let only = (PortRef::new(n, "left_only"), outs[1].clone());
                self.unary("dedup", Op::Dedup, &only)
            }
            RAExpr::Intersect { left, right } => {
                let (l, r) = (self.go(left)?, self.go(right)?);
                let (n, outs) = self.binary("intersect", Op::Membership, &l, &r)?;
                self.sink(SinkRole::Error, &PortRef::new(n.clone(), "left_only"));
                self.sink(SinkRole::Error, &PortRef::new(n.clone(), "right_only"));
                let ls = (PortRef::new(n.clone(), "left_shared"), outs[0].clone());
                let rs = (PortRef::new(n, "right_shared"), outs[2].clone());
                let u = self.union_all(&ls, &rs)?;
                self.unary("dedup", Op::Dedup, &u)
            }
            RAExpr::Aggregate { group_by, specs, input } => {
                let i = self.go(input)?;
                self.unary(
                    "aggregate",
                    Op::Aggregate {
                        group_by: group_by.clone(),
                        specs: specs.clone(),
                    },
                    &i,
                )
            }
            RAExpr::Map { fields, input } => {
                let i = self.go(input)?;
                self.unary("map", Op::Fmap { fields: fields.clone() }, &i)
            }
        }
    }

    fn cross(&mut self, l: &Port, r: &Port) -> Result<Port, String> {
        let (n, outs) = self.binary("cross", Op::OuterJoin { on: vec![] }, l, r)?;
        self.sink(SinkRole::Auxiliary, &PortRef::new(n.clone(), "left"));
        self.sink(SinkRole::Auxiliary, &PortRef::new(n.clone(), "right"));
        Ok((PortRef::new(n, "inner"), outs[0].clone()))
    }

    /// Pads the unmatched sides of a join node to the inner schema and
    /// unions all three parts.
    fn pad_and_merge(&mut self, n: &str, outs: &[Schema], inner: Port) -> Result<Port, String> {
        let target = inner.1.clone();
        let lpad = self.pad(&(PortRef::new(n, "left"), outs[1].clone()), &target)?;
        let rpad = self.pad(&(PortRef::new(n, "right"), outs[2].clone()), &target)?;
        let lr = self.union_all(&lpad, &rpad)?;
        self.union_all(&inner, &lr)
    }
}

pub fn translate(expr: &RAExpr, bases: &BTreeMap<String, Schema>) -> Result<TranslatedQuery, TypeError> {
    translate_with(expr, bases, Mutant::None)
}

/// Translates a well-typed expression into a pipeline graph whose
/// [`RESULT_SINK`] holds the classical answer and whose other sinks hold the
/// complementary data.
pub fn translate_with(
    expr: &RAExpr,
    bases: &BTreeMap<String, Schema>,
    mutant: Mutant,
) -> Result<TranslatedQuery, TypeError> {
    expr.typecheck(bases)?;
    let mut b = Builder {
        bases,
        mutant,
        graph: PipelineGraph::new("query"),
        occurrences: Vec::new(),
    };
    let out = b.go(expr).map_err(|detail| TypeError {
        path: expr.kind().to_string(),
        detail,
    })?;
    b.graph.nodes.push(Node::new(RESULT_SINK, Op::Sink { role: SinkRole::Report }));
    b.wire(&out.0, RESULT_SINK, "in");
    Ok(TranslatedQuery {
        graph: b.graph,
        occurrences: b.occurrences,
    })
}
