//! Pipeline graphs: named operation nodes wired port to port.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::expr::{Expr, Predicate};
use crate::ops::{self, AggSpec, FieldDef};
use crate::relation::{Column, Schema};

/// `node.port`, written as a single string in documents.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PortRef {
    pub node: String,
    pub port: String,
}

impl PortRef {
    pub fn new(node: impl Into<String>, port: impl Into<String>) -> Self {
        PortRef {
            node: node.into(),
            port: port.into(),
        }
    }
}

impl fmt::Display for PortRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.node, self.port)
    }
}

impl FromStr for PortRef {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.rsplit_once('.') {
            Some((n, p)) if !n.is_empty() && !p.is_empty() => Ok(PortRef::new(n, p)),
            _ => Err(format!("expected `node.port`, got `{s}`")),
        }
    }
}

impl TryFrom<String> for PortRef {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<PortRef> for String {
    fn from(p: PortRef) -> String {
        p.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Wire {
    pub from: PortRef,
    pub to: PortRef,
}

impl Wire {
    pub fn new(from: PortRef, to: PortRef) -> Self {
        Wire { from, to }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SinkRole {
    /// Correct records form a report.
    Report,
    /// Incoming records are errors, stamped with the producing stage and port.
    Error,
    /// Complementary data kept for audit (unused reference rows, forward quotes).
    Auxiliary,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Op {
    Source {
        input: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        schema: Option<Schema>,
    },
    Partition {
        predicate: Predicate,
    },
    OuterJoin {
        #[serde(default)]
        on: Vec<(String, String)>,
    },
    /// Outer join whose unmatched ports go to the error track by default:
    /// left as `missing`, right as `unused`.
    Lookup {
        on: Vec<(String, String)>,
    },
    Membership,
    Project {
        keep: Vec<String>,
    },
    Dedup,
    Rename {
        mapping: BTreeMap<String, String>,
    },
    Fmap {
        fields: Vec<FieldDef>,
    },
    Emap {
        fields: Vec<FieldDef>,
    },
    Totalize {
        field: String,
        expr: Expr,
        domain: Predicate,
    },
    Aggregate {
        #[serde(default)]
        group_by: Vec<String>,
        #[serde(default)]
        specs: Vec<AggSpec>,
    },
    TaggedUnion {
        #[serde(default)]
        label: Option<String>,
    },
    Untag,
    StripTags,
    Sink {
        role: SinkRole,
    },
}

impl Op {
    pub fn inputs(&self) -> &'static [&'static str] {
        match self {
            Op::Source { .. } => &[],
            Op::OuterJoin { .. } | Op::Lookup { .. } | Op::Membership | Op::TaggedUnion { .. } => {
                &["left", "right"]
            }
            _ => &["in"],
        }
    }

    /// Output ports; the first is primary and carries the error track.
    pub fn outputs(&self) -> &'static [&'static str] {
        match self {
            Op::Sink { .. } => &[],
            Op::Partition { .. } => &["accepted", "rejected"],
            Op::OuterJoin { .. } | Op::Lookup { .. } => &["inner", "left", "right"],
            Op::Membership => &["left_shared", "left_only", "right_shared", "right_only"],
            Op::Totalize { .. } => &["defined", "passthrough"],
            Op::Untag => &["left", "right"],
            _ => &["out"],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Op::Source { .. } => "source",
            Op::Partition { .. } => "partition",
            Op::OuterJoin { .. } => "outer_join",
            Op::Lookup { .. } => "lookup",
            Op::Membership => "membership",
            Op::Project { .. } => "project",
            Op::Dedup => "dedup",
            Op::Rename { .. } => "rename",
            Op::Fmap { .. } => "fmap",
            Op::Emap { .. } => "emap",
            Op::Totalize { .. } => "totalize",
            Op::Aggregate { .. } => "aggregate",
            Op::TaggedUnion { .. } => "tagged_union",
            Op::Untag => "untag",
            Op::StripTags => "strip_tags",
            Op::Sink { .. } => "sink",
        }
    }

    /// Output schemas given input schemas, in port order.
    pub fn infer(&self, inputs: &[&Schema]) -> Result<Vec<Schema>, String> {
        let one = |s: &Schema, n: usize| vec![s.clone(); n];
        match self {
            Op::Source { schema, .. } => schema
                .clone()
                .map(|s| vec![s])
                .ok_or_else(|| "source has no schema".to_string()),
            Op::Partition { predicate } => {
                predicate.check(inputs[0])?;
                Ok(one(inputs[0], 2))
            }
            Op::OuterJoin { on } | Op::Lookup { on } => {
                let inner = ops::join_schema(inputs[0], inputs[1], on).map_err(|e| e.to_string())?;
                Ok(vec![inner, inputs[0].clone(), inputs[1].clone()])
            }
            Op::Membership | Op::TaggedUnion { .. } => {
                if !inputs[0].same_fields(inputs[1]) {
                    return Err(format!("inputs differ: {} vs {}", inputs[0], inputs[1]));
                }
                Ok(match self {
                    Op::Membership => vec![
                        inputs[0].clone(),
                        inputs[0].clone(),
                        inputs[1].clone(),
                        inputs[1].clone(),
                    ],
                    _ => vec![inputs[0].clone()],
                })
            }
            Op::Project { keep } => {
                let set = keep.iter().map(String::as_str).collect();
                for k in keep {
                    if !inputs[0].contains(k) {
                        return Err(format!("unknown field `{k}`"));
                    }
                }
                Ok(vec![inputs[0].restricted(&set)])
            }
            Op::Dedup | Op::StripTags => Ok(one(inputs[0], 1)),
            Op::Untag => Ok(one(inputs[0], 2)),
            Op::Rename { mapping } => Ok(vec![ops::rename_schema(inputs[0], mapping).map_err(|e| e.to_string())?]),
            Op::Fmap { fields } => Ok(vec![ops::fmap_schema(inputs[0], fields).map_err(|e| e.to_string())?]),
            Op::Emap { fields } => {
                for f in fields {
                    if inputs[0].contains(&f.name) {
                        return Err(format!("emap may not write business field `{}`", f.name));
                    }
                }
                Ok(one(inputs[0], 1))
            }
            Op::Totalize { field, expr, domain } => {
                domain.check(inputs[0])?;
                if inputs[0].contains(field) {
                    return Err(format!("field `{field}` already exists"));
                }
                let ty = expr.infer(inputs[0])?;
                let defined = inputs[0]
                    .extended([Column::new(field.clone(), ty)])
                    .map_err(|e| e.to_string())?;
                Ok(vec![defined, inputs[0].clone()])
            }
            Op::Aggregate { group_by, specs } => Ok(vec![
                ops::aggregate_schema(inputs[0], group_by, specs).map_err(|e| e.to_string())?,
            ]),
            Op::Sink { .. } => Ok(vec![]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub name: String,
    #[serde(flatten)]
    pub op: Op,
    /// Output ports whose records go onto the error track with the given
    /// reason instead of being wired onward.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub divert: BTreeMap<String, String>,
}

impl Node {
    pub fn new(name: impl Into<String>, op: Op) -> Self {
        Node {
            name: name.into(),
            op,
            divert: BTreeMap::new(),
        }
    }

    pub fn diverting(mut self, port: &str, reason: &str) -> Self {
        self.divert.insert(port.to_string(), reason.to_string());
        self
    }

    /// Declared diversions plus the defaults of lookup nodes.
    pub fn effective_divert(&self) -> BTreeMap<String, String> {
        let mut d = BTreeMap::new();
        if let Op::Lookup { .. } = self.op {
            d.insert("left".to_string(), "missing".to_string());
            d.insert("right".to_string(), "unused".to_string());
        }
        d.extend(self.divert.clone());
        d
    }

    pub fn primary_output(&self) -> Option<&'static str> {
        self.op.outputs().first().copied()
    }
}

/// A DAG of nodes. `label_field` names the field used to list which source
/// records were accounted for or not in the dashboard.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineGraph {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_field: Option<String>,
    #[serde(default)]
    pub nodes: Vec<Node>,
    #[serde(default)]
    pub wires: Vec<Wire>,
}

impl PipelineGraph {
    pub fn new(name: impl Into<String>) -> Self {
        PipelineGraph {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn node(mut self, n: Node) -> Self {
        self.nodes.push(n);
        self
    }

    /// Adds a wire from `"a.port"` to `"b.port"`. Panics on malformed refs,
    /// so meant for graphs built in code.
    pub fn wire(mut self, from: &str, to: &str) -> Self {
        self.wires.push(Wire::new(
            from.parse().expect("port reference"),
            to.parse().expect("port reference"),
        ));
        self
    }

    pub fn find(&self, name: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.name == name)
    }

    /// Fills in schemas of source nodes from `schemas`, keyed by input name.
    pub fn bind_schemas(&mut self, schemas: &BTreeMap<String, Schema>) {
        for n in &mut self.nodes {
            if let Op::Source { input, schema } = &mut n.op {
                if schema.is_none() {
                    *schema = schemas.get(input).cloned();
                }
            }
        }
    }

    pub fn sources(&self) -> impl Iterator<Item = (&Node, &str)> {
        self.nodes.iter().filter_map(|n| match &n.op {
            Op::Source { input, .. } => Some((n, input.as_str())),
            _ => None,
        })
    }

    pub fn sinks(&self) -> impl Iterator<Item = (&Node, SinkRole)> {
        self.nodes.iter().filter_map(|n| match &n.op {
            Op::Sink { role } => Some((n, *role)),
            _ => None,
        })
    }
}
