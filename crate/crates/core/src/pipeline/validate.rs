//! Static checks: every produced port is consumed exactly once, the graph is
//! acyclic and schemas line up across wires.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::pipeline::graph::{Op, PipelineGraph, PortRef};
use crate::relation::Schema;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum Violation {
    UnconsumedPort { port: PortRef },
    PortConsumedTwice { port: PortRef },
    InputNotFed { port: PortRef },
    InputFedTwice { port: PortRef },
    UnknownPort { port: PortRef },
    DuplicateNode { node: String },
    Cycle { nodes: Vec<String> },
    MissingSchema { node: String },
    BadDivert { node: String, port: String },
    SchemaMismatch { node: String, detail: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnconsumedPort { port } => write!(f, "UnconsumedPort({port})"),
            Violation::PortConsumedTwice { port } => write!(f, "PortConsumedTwice({port})"),
            Violation::InputNotFed { port } => write!(f, "InputNotFed({port})"),
            Violation::InputFedTwice { port } => write!(f, "InputFedTwice({port})"),
            Violation::UnknownPort { port } => write!(f, "UnknownPort({port})"),
            Violation::DuplicateNode { node } => write!(f, "DuplicateNode({node})"),
            Violation::Cycle { nodes } => write!(f, "Cycle({})", nodes.join(", ")),
            Violation::MissingSchema { node } => write!(f, "MissingSchema({node})"),
            Violation::BadDivert { node, port } => write!(f, "BadDivert({node}.{port})"),
            Violation::SchemaMismatch { node, detail } => write!(f, "SchemaMismatch({node}: {detail})"),
        }
    }
}

/// Nodes grouped into waves: every node depends only on earlier waves.
/// On a cycle, returns the names of the nodes that could not be ordered.
pub(crate) fn waves(graph: &PipelineGraph) -> Result<Vec<Vec<usize>>, Vec<String>> {
    let index: BTreeMap<&str, usize> = graph
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.name.as_str(), i))
        .collect();
    let mut deps: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); graph.nodes.len()];
    for w in &graph.wires {
        if let (Some(&a), Some(&b)) = (index.get(w.from.node.as_str()), index.get(w.to.node.as_str())) {
            deps[b].insert(a);
        }
    }
    let mut done = vec![false; graph.nodes.len()];
    let mut out = Vec::new();
    loop {
        let wave: Vec<usize> = (0..graph.nodes.len())
            .filter(|&i| !done[i] && deps[i].iter().all(|&d| done[d]))
            .collect();
        if wave.is_empty() {
            break;
        }
        for &i in &wave {
            done[i] = true;
        }
        out.push(wave);
    }
    let stuck: Vec<String> = (0..graph.nodes.len())
        .filter(|&i| !done[i])
        .map(|i| graph.nodes[i].name.clone())
        .collect();
    if stuck.is_empty() {
        Ok(out)
    } else {
        Err(stuck)
    }
}

/// Checks the graph. An empty list means it is safe to run.
pub fn validate(graph: &PipelineGraph) -> Vec<Violation> {
    let mut v = Vec::new();
    let mut names = BTreeSet::new();
    for n in &graph.nodes {
        if !names.insert(n.name.as_str()) {
            v.push(Violation::DuplicateNode { node: n.name.clone() });
        }
        for port in n.divert.keys() {
            let is_output = n.op.outputs().contains(&port.as_str());
            if !is_output || n.primary_output() == Some(port.as_str()) {
                v.push(Violation::BadDivert {
                    node: n.name.clone(),
                    port: port.clone(),
                });
            }
        }
        if let Op::Source { schema: None, .. } = n.op {
            v.push(Violation::MissingSchema { node: n.name.clone() });
        }
    }

    let mut consumed: BTreeMap<PortRef, usize> = BTreeMap::new();
    let mut fed: BTreeMap<PortRef, usize> = BTreeMap::new();
    for w in &graph.wires {
        let from_ok = graph
            .find(&w.from.node)
            .is_some_and(|n| n.op.outputs().contains(&w.from.port.as_str()));
        let to_ok = graph
            .find(&w.to.node)
            .is_some_and(|n| n.op.inputs().contains(&w.to.port.as_str()));
        if !from_ok {
            v.push(Violation::UnknownPort { port: w.from.clone() });
        }
        if !to_ok {
            v.push(Violation::UnknownPort { port: w.to.clone() });
        }
        *consumed.entry(w.from.clone()).or_default() += 1;
        *fed.entry(w.to.clone()).or_default() += 1;
    }

    for n in &graph.nodes {
        let divert = n.effective_divert();
        for p in n.op.outputs() {
            let port = PortRef::new(n.name.clone(), *p);
            let uses = consumed.get(&port).copied().unwrap_or(0) + usize::from(divert.contains_key(*p));
            match uses {
                0 => v.push(Violation::UnconsumedPort { port }),
                1 => {}
                _ => v.push(Violation::PortConsumedTwice { port }),
            }
        }
        for p in n.op.inputs() {
            let port = PortRef::new(n.name.clone(), *p);
            match fed.get(&port).copied().unwrap_or(0) {
                0 => v.push(Violation::InputNotFed { port }),
                1 => {}
                _ => v.push(Violation::InputFedTwice { port }),
            }
        }
    }

    match waves(graph) {
        Err(nodes) => v.push(Violation::Cycle { nodes }),
        Ok(_) if v.is_empty() => v.extend(infer_schemas(graph).1),
        Ok(_) => {}
    }
    v
}

/// Schema of every output port, inferred in topological order.
pub(crate) fn infer_schemas(graph: &PipelineGraph) -> (BTreeMap<PortRef, Schema>, Vec<Violation>) {
    let mut schemas: BTreeMap<PortRef, Schema> = BTreeMap::new();
    let mut v = Vec::new();
    let Ok(order) = waves(graph) else {
        return (schemas, v);
    };
    let feeding: BTreeMap<&PortRef, &PortRef> = graph.wires.iter().map(|w| (&w.to, &w.from)).collect();
    for i in order.into_iter().flatten() {
        let n = &graph.nodes[i];
        let mut inputs = Vec::new();
        for p in n.op.inputs() {
            let port = PortRef::new(n.name.clone(), *p);
            match feeding.get(&port).and_then(|src| schemas.get(*src)) {
                Some(s) => inputs.push(s),
                None => break,
            }
        }
        if inputs.len() != n.op.inputs().len() {
            continue;
        }
        match n.op.infer(&inputs) {
            Ok(outs) => {
                let outs: Vec<(PortRef, Schema)> = n
                    .op
                    .outputs()
                    .iter()
                    .zip(outs)
                    .map(|(p, s)| (PortRef::new(n.name.clone(), *p), s))
                    .collect();
                schemas.extend(outs);
            }
            Err(detail) => v.push(Violation::SchemaMismatch {
                node: n.name.clone(),
                detail,
            }),
        }
    }
    (schemas, v)
}
