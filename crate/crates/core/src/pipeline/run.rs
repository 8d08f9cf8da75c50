//! Topological execution with per-stage pid ledgers.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::FieldLookup;
use crate::ops::{self, OpError, Totalized};
use crate::pipeline::graph::{Node, Op, PipelineGraph, PortRef, SinkRole};
use crate::pipeline::validate::{validate, waves, Violation};
use crate::pipeline::SpaceDecl;
use crate::relation::{Column, Record, Relation};
use crate::stream::{ErrorRecord, Stream};
use crate::value::Pid;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("graph is invalid: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidGraph(Vec<Violation>),
    #[error("no input named `{0}`")]
    MissingInput(String),
    #[error("stage `{node}`: {detail}")]
    SchemaMismatch { node: String, detail: String },
    #[error("stage `{stage}`: {source}")]
    Stage { stage: String, source: OpError },
}

/// Pids leaving a stage through one port. Diverted ports are labelled
/// `port/reason`; errors passed through from upstream are labelled `errors`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortLedger {
    pub label: String,
    pub pids: BTreeSet<Pid>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageLedger {
    pub stage: String,
    pub op: String,
    pub inputs: BTreeSet<Pid>,
    pub outputs: Vec<PortLedger>,
}

/// One group of error records at a sink.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorStamp {
    pub stage: String,
    pub reason: String,
    pub pids: BTreeSet<Pid>,
    pub records: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SinkLedger {
    pub role: SinkRole,
    pub rows: usize,
    pub correct_pids: BTreeSet<Pid>,
    pub errors: Vec<ErrorStamp>,
}

impl SinkLedger {
    pub fn pids(&self) -> BTreeSet<Pid> {
        let mut p = self.correct_pids.clone();
        for e in &self.errors {
            p.extend(e.pids.iter().copied());
        }
        p
    }

    pub fn error_pids(&self) -> BTreeSet<Pid> {
        self.errors.iter().flat_map(|e| e.pids.iter().copied()).collect()
    }
}

/// Everything needed to audit a run after the fact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunAudit {
    pub graph: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_field: Option<String>,
    pub stages: Vec<StageLedger>,
    pub sources: BTreeMap<String, BTreeSet<Pid>>,
    pub sinks: BTreeMap<String, SinkLedger>,
    /// Source records as ingested, by pid.
    pub origin: BTreeMap<Pid, Record>,
    #[serde(default)]
    pub spaces: Vec<SpaceDecl>,
    /// Wall-clock time per stage. Not serialized, so outputs stay byte-stable.
    #[serde(skip)]
    pub timing: Vec<(String, Duration)>,
}

impl RunAudit {
    pub fn source_pids(&self) -> BTreeSet<Pid> {
        self.sources.values().flatten().copied().collect()
    }

    /// Every (stage, port) each pid passed out of, in execution order.
    pub fn trace_index(&self) -> BTreeMap<Pid, Vec<(String, String)>> {
        let mut idx: BTreeMap<Pid, Vec<(String, String)>> = BTreeMap::new();
        for s in &self.stages {
            for o in &s.outputs {
                for p in &o.pids {
                    idx.entry(*p).or_default().push((s.stage.clone(), o.label.clone()));
                }
            }
        }
        idx
    }

    pub fn trace(&self, pid: Pid) -> Vec<(String, String)> {
        self.trace_index().remove(&pid).unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SinkOutput {
    pub name: String,
    pub role: SinkRole,
    pub correct: Relation,
    pub errors: Vec<ErrorRecord>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub sinks: BTreeMap<String, SinkOutput>,
    pub audit: RunAudit,
}

enum Produced {
    Ports(Vec<Stream>, StageLedger),
    Sink(SinkOutput, StageLedger),
}

fn stage_err(node: &Node) -> impl Fn(OpError) -> RunError + '_ {
    move |source| RunError::Stage {
        stage: node.name.clone(),
        source,
    }
}

fn exec(node: &Node, inputs: Vec<Stream>, feeder: Option<&PortRef>) -> Result<Produced, RunError> {
    let mut in_pids = BTreeSet::new();
    for s in &inputs {
        in_pids.extend(s.pids());
    }
    let mut carried: Vec<ErrorRecord> = Vec::new();
    let mut rels: Vec<Relation> = Vec::new();
    for s in inputs {
        carried.extend(s.errors);
        rels.push(s.correct);
    }
    let err = stage_err(node);
    let mut rels = rels.into_iter();
    let mut next = || rels.next().expect("validated arity");

    if let Op::Sink { role } = node.op {
        let correct = next();
        let (correct, mut errors) = match role {
            SinkRole::Error => {
                let (schema, rows) = correct.into_parts();
                let (stage, reason) = feeder
                    .map(|p| (p.node.clone(), p.port.clone()))
                    .unwrap_or_else(|| (node.name.clone(), "in".to_string()));
                let stamped = rows.into_iter().map(|r| ErrorRecord::new(r, &stage, &reason));
                (Relation::empty(schema), stamped.collect::<Vec<_>>())
            }
            _ => (correct, Vec::new()),
        };
        errors.extend(carried);
        let ledger = StageLedger {
            stage: node.name.clone(),
            op: node.op.name().to_string(),
            inputs: in_pids.clone(),
            outputs: vec![PortLedger {
                label: "sink".into(),
                pids: in_pids,
            }],
        };
        return Ok(Produced::Sink(
            SinkOutput {
                name: node.name.clone(),
                role,
                correct,
                errors,
            },
            ledger,
        ));
    }

    let outs: Vec<Relation> = match &node.op {
        Op::Source { .. } | Op::Sink { .. } => unreachable!("handled by caller"),
        Op::Partition { predicate } => {
            let (a, r) = ops::partition(next(), predicate);
            vec![a, r]
        }
        Op::OuterJoin { on } | Op::Lookup { on } => {
            let (l, r) = (next(), next());
            let j = ops::outer_join(l, r, on).map_err(&err)?;
            vec![j.inner, j.left, j.right]
        }
        Op::Membership => {
            let (l, r) = (next(), next());
            let m = ops::membership(l, r);
            vec![m.left_shared, m.left_only, m.right_shared, m.right_only]
        }
        Op::Project { keep } => {
            let keep: Vec<&str> = keep.iter().map(String::as_str).collect();
            vec![ops::lossless_project(next(), &keep).map_err(&err)?]
        }
        Op::Dedup => vec![ops::dedup(next())],
        Op::Rename { mapping } => vec![ops::rename(next(), mapping).map_err(&err)?],
        Op::Fmap { fields } => vec![ops::fmap(next().into(), fields).map_err(&err)?.correct],
        Op::Emap { fields } => {
            let s = ops::emap(Stream::new(next(), std::mem::take(&mut carried)), fields).map_err(&err)?;
            carried = s.errors;
            vec![s.correct]
        }
        Op::Totalize { field, expr, domain } => {
            let rel = next();
            let ty = expr.infer(rel.schema()).map_err(|detail| RunError::SchemaMismatch {
                node: node.name.clone(),
                detail,
            })?;
            let defined_schema = rel
                .schema()
                .extended([Column::new(field.clone(), ty)])
                .map_err(|e| err(e.into()))?;
            let (schema, rows) = rel.into_parts();
            let f = ops::totalize(
                |r: &Record| {
                    let v = expr.eval(r);
                    (!v.is_missing()).then_some(v)
                },
                |r: &Record| domain.eval(r).holds(),
            );
            let mut defined = Vec::new();
            let mut passthrough = Vec::new();
            for r in rows {
                match f(r.clone()).map_err(&err)? {
                    Totalized::Defined(v) => {
                        let mut r = r;
                        r.relevant_mut().insert(field.clone(), v);
                        defined.push(r);
                    }
                    Totalized::Passthrough(r) => passthrough.push(r),
                }
            }
            vec![
                Relation::from_records(defined_schema, defined).map_err(|e| err(e.into()))?,
                Relation::from_records_unchecked(schema, passthrough),
            ]
        }
        Op::Aggregate { group_by, specs } => vec![ops::aggregate(next(), group_by, specs).map_err(&err)?],
        Op::TaggedUnion { label } => {
            let (l, r) = (next(), next());
            let label = label.clone().unwrap_or_else(|| node.name.clone());
            vec![ops::tagged_union(l, r, &label).map_err(&err)?]
        }
        Op::Untag => {
            let (l, r) = ops::untag(next()).map_err(&err)?;
            vec![l, r]
        }
        Op::StripTags => vec![ops::strip_tags(next()).map_err(&err)?],
    };

    let divert = node.effective_divert();
    let carried_pids: BTreeSet<Pid> = carried.iter().flat_map(|e| e.pids().iter().copied()).collect();
    let mut ledger_out = Vec::new();
    let mut streams: Vec<Stream> = Vec::new();
    let mut diverted: Vec<ErrorRecord> = Vec::new();
    for (port, rel) in node.op.outputs().iter().zip(outs) {
        match divert.get(*port) {
            Some(reason) => {
                ledger_out.push(PortLedger {
                    label: format!("{port}/{reason}"),
                    pids: rel.pids(),
                });
                let schema = rel.schema().clone();
                diverted.extend(rel.into_rows().into_iter().map(|r| ErrorRecord::new(r, &node.name, reason)));
                streams.push(Stream::empty(schema));
            }
            None => {
                ledger_out.push(PortLedger {
                    label: port.to_string(),
                    pids: rel.pids(),
                });
                streams.push(rel.into());
            }
        }
    }
    if !carried_pids.is_empty() {
        ledger_out.push(PortLedger {
            label: "errors".into(),
            pids: carried_pids,
        });
    }
    carried.extend(diverted);
    streams[0].errors = carried;
    Ok(Produced::Ports(
        streams,
        StageLedger {
            stage: node.name.clone(),
            op: node.op.name().to_string(),
            inputs: in_pids,
            outputs: ledger_out,
        },
    ))
}

fn exec_source(node: &Node, inputs: &BTreeMap<String, Stream>) -> Result<Produced, RunError> {
    let Op::Source { input, schema } = &node.op else {
        unreachable!()
    };
    let s = inputs.get(input).ok_or_else(|| RunError::MissingInput(input.clone()))?;
    if let Some(declared) = schema {
        if !declared.same_fields(s.correct.schema()) {
            return Err(RunError::SchemaMismatch {
                node: node.name.clone(),
                detail: format!("declared {declared}, got {}", s.correct.schema()),
            });
        }
    }
    let mut outputs = vec![PortLedger {
        label: "out".into(),
        pids: s.correct_pids(),
    }];
    if !s.errors.is_empty() {
        outputs.push(PortLedger {
            label: "errors".into(),
            pids: s.error_pids(),
        });
    }
    Ok(Produced::Ports(
        vec![s.clone()],
        StageLedger {
            stage: node.name.clone(),
            op: "source".into(),
            inputs: s.pids(),
            outputs,
        },
    ))
}

/// Runs a validated graph over named input streams.
///
/// Nodes in the same wave run in parallel; results are merged in node order,
/// so outputs do not depend on scheduling. Bad rows never abort a run: they
/// travel on the error track. Only configuration problems return `Err`.
pub fn run(
    graph: &PipelineGraph,
    inputs: &BTreeMap<String, Stream>,
    spaces: &[SpaceDecl],
) -> Result<RunOutput, RunError> {
    let violations = validate(graph);
    if !violations.is_empty() {
        return Err(RunError::InvalidGraph(violations));
    }
    let order = waves(graph).map_err(|nodes| RunError::InvalidGraph(vec![Violation::Cycle { nodes }]))?;
    let feeding: BTreeMap<PortRef, PortRef> = graph.wires.iter().map(|w| (w.to.clone(), w.from.clone())).collect();
    let consumer: BTreeMap<PortRef, PortRef> = graph.wires.iter().map(|w| (w.from.clone(), w.to.clone())).collect();

    let mut pending: BTreeMap<PortRef, Stream> = BTreeMap::new();
    let mut audit = RunAudit {
        graph: graph.name.clone(),
        label_field: graph.label_field.clone(),
        stages: Vec::new(),
        sources: BTreeMap::new(),
        sinks: BTreeMap::new(),
        origin: BTreeMap::new(),
        spaces: spaces.to_vec(),
        timing: Vec::new(),
    };
    let mut sinks = BTreeMap::new();

    for wave in order {
        let jobs: Vec<(usize, Vec<Stream>)> = wave
            .into_iter()
            .map(|i| {
                let n = &graph.nodes[i];
                let ins = n
                    .op
                    .inputs()
                    .iter()
                    .map(|p| {
                        pending
                            .remove(&PortRef::new(n.name.clone(), *p))
                            .expect("every input is fed by an earlier wave")
                    })
                    .collect();
                (i, ins)
            })
            .collect();
        let results: Vec<(usize, Result<Produced, RunError>, Duration)> = jobs
            .into_par_iter()
            .map(|(i, ins)| {
                let n = &graph.nodes[i];
                let t = Instant::now();
                let r = match n.op {
                    Op::Source { .. } => exec_source(n, inputs),
                    _ => exec(n, ins, feeding.get(&PortRef::new(n.name.clone(), "in"))),
                };
                (i, r, t.elapsed())
            })
            .collect();
        for (i, r, elapsed) in results {
            let n = &graph.nodes[i];
            audit.timing.push((n.name.clone(), elapsed));
            match r? {
                Produced::Ports(streams, ledger) => {
                    if let Op::Source { .. } = n.op {
                        let s = &streams[0];
                        audit.sources.insert(n.name.clone(), s.pids());
                        for r in s.correct.rows() {
                            for p in r.pids() {
                                audit.origin.insert(*p, r.clone());
                            }
                        }
                        for e in &s.errors {
                            for p in e.pids() {
                                audit.origin.insert(*p, e.record.clone());
                            }
                        }
                    }
                    audit.stages.push(ledger);
                    for (port, s) in n.op.outputs().iter().zip(streams) {
                        if let Some(to) = consumer.get(&PortRef::new(n.name.clone(), *port)) {
                            pending.insert(to.clone(), s);
                        } else {
                            debug_assert!(s.correct.is_empty(), "diverted port keeps no records");
                        }
                    }
                }
                Produced::Sink(out, ledger) => {
                    audit.stages.push(ledger);
                    audit.sinks.insert(out.name.clone(), sink_ledger(&out));
                    sinks.insert(out.name.clone(), out);
                }
            }
        }
    }
    Ok(RunOutput { sinks, audit })
}

fn sink_ledger(out: &SinkOutput) -> SinkLedger {
    let mut groups: BTreeMap<(String, String), (BTreeSet<Pid>, usize)> = BTreeMap::new();
    for e in &out.errors {
        let g = groups.entry((e.stage.clone(), e.reason.clone())).or_default();
        g.0.extend(e.pids().iter().copied());
        g.1 += 1;
    }
    SinkLedger {
        role: out.role,
        rows: out.correct.len(),
        correct_pids: out.correct.pids(),
        errors: groups
            .into_iter()
            .map(|((stage, reason), (pids, records))| ErrorStamp {
                stage,
                reason,
                pids,
                records,
            })
            .collect(),
    }
}

/// Label of a source record, used in dashboards.
pub(crate) fn label_of(rec: &Record, field: &str) -> Option<String> {
    rec.field(field).filter(|v| !v.is_missing()).map(|v| v.to_string())
}
