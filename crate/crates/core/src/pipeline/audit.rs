//! Conservation checks over a completed run.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::monoid::{InformationMonoid, MonoidElement};
use crate::pipeline::run::RunAudit;
use crate::pipeline::SpaceDecl;
use crate::value::Pid;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConservationViolation {
    pub stage: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpaceCheck {
    pub space: String,
    pub source: Option<MonoidElement>,
    pub fused: Option<MonoidElement>,
    pub equal: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub graph: String,
    pub passed: bool,
    pub violations: Vec<ConservationViolation>,
    pub spaces: Vec<SpaceCheck>,
}

fn show(pids: &BTreeSet<Pid>) -> String {
    let v: Vec<String> = pids.iter().map(|p| p.to_string()).collect();
    format!("{{{}}}", v.join(", "))
}

/// Partition of source pids by the set of sinks each one reached.
pub fn membership_classes(audit: &RunAudit) -> BTreeMap<BTreeSet<String>, BTreeSet<Pid>> {
    let mut reached: BTreeMap<Pid, BTreeSet<String>> = BTreeMap::new();
    for (name, s) in &audit.sinks {
        for p in s.pids() {
            reached.entry(p).or_default().insert(name.clone());
        }
    }
    let mut classes: BTreeMap<BTreeSet<String>, BTreeSet<Pid>> = BTreeMap::new();
    for (p, sinks) in reached {
        classes.entry(sinks).or_default().insert(p);
    }
    classes
}

/// Fusion of a declared space's measure over the origin records of `pids`.
pub fn space_measure(audit: &RunAudit, space: &SpaceDecl, pids: &BTreeSet<Pid>) -> Result<MonoidElement, String> {
    let m = InformationMonoid::new(space.measure.kind());
    let mut acc = m.unit();
    for p in pids {
        let rec = audit
            .origin
            .get(p)
            .ok_or_else(|| format!("no origin record for pid {p}"))?;
        let e = space.measure.element(rec).map_err(|e| e.to_string())?;
        acc = m.fuse(&acc, &e).map_err(|e| e.to_string())?;
    }
    Ok(acc)
}

/// Recomputes conservation from the ledgers:
///
/// * each stage's output pids cover exactly its input pids;
/// * the sinks together hold exactly the source pids;
/// * every error record names a stage and a reason;
/// * for every declared space, fusing the measures of the membership
///   classes gives the measure of the sources.
///
/// Violations name the stage where the discrepancy shows up.
pub fn conservation_check(audit: &RunAudit) -> Verdict {
    let mut violations = Vec::new();
    for s in &audit.stages {
        let out: BTreeSet<Pid> = s.outputs.iter().flat_map(|o| o.pids.iter().copied()).collect();
        let lost: BTreeSet<Pid> = s.inputs.difference(&out).copied().collect();
        let invented: BTreeSet<Pid> = out.difference(&s.inputs).copied().collect();
        if !lost.is_empty() {
            violations.push(ConservationViolation {
                stage: s.stage.clone(),
                detail: format!("pids {} enter but never leave", show(&lost)),
            });
        }
        if !invented.is_empty() && s.op != "source" {
            violations.push(ConservationViolation {
                stage: s.stage.clone(),
                detail: format!("pids {} leave without entering", show(&invented)),
            });
        }
    }

    let sources = audit.source_pids();
    let mut at_sinks = BTreeSet::new();
    for (name, s) in &audit.sinks {
        at_sinks.extend(s.pids());
        for e in &s.errors {
            if e.stage.is_empty() || e.reason.is_empty() {
                violations.push(ConservationViolation {
                    stage: name.clone(),
                    detail: "error record without stage or reason".into(),
                });
            }
        }
    }
    let missing: BTreeSet<Pid> = sources.difference(&at_sinks).copied().collect();
    if !missing.is_empty() {
        let trace = audit.trace_index();
        let mut by_stage: BTreeMap<String, BTreeSet<Pid>> = BTreeMap::new();
        for p in &missing {
            let last = trace
                .get(p)
                .and_then(|t| t.last())
                .map(|(s, port)| format!("{s}.{port}"))
                .unwrap_or_else(|| "<ingest>".to_string());
            by_stage.entry(last).or_default().insert(*p);
        }
        for (stage, pids) in by_stage {
            violations.push(ConservationViolation {
                stage,
                detail: format!("pids {} never reach a sink", show(&pids)),
            });
        }
    }
    let foreign: BTreeSet<Pid> = at_sinks.difference(&sources).copied().collect();
    if !foreign.is_empty() {
        violations.push(ConservationViolation {
            stage: "<sinks>".into(),
            detail: format!("pids {} are not source pids", show(&foreign)),
        });
    }

    let classes = membership_classes(audit);
    let mut spaces = Vec::new();
    for sp in &audit.spaces {
        let m = InformationMonoid::new(sp.measure.kind());
        let source = space_measure(audit, sp, &sources);
        let fused = classes.values().try_fold(m.unit(), |acc, pids| {
            let e = space_measure(audit, sp, pids)?;
            m.fuse(&acc, &e).map_err(|e| e.to_string())
        });
        let equal = matches!((&source, &fused), (Ok(a), Ok(b)) if a == b);
        if !equal {
            let detail = match (&source, &fused) {
                (Err(e), _) | (_, Err(e)) => e.clone(),
                (Ok(a), Ok(b)) => format!("source measure {a} but sinks fuse to {b}"),
            };
            violations.push(ConservationViolation {
                stage: format!("<space {}>", sp.name),
                detail,
            });
        }
        spaces.push(SpaceCheck {
            space: sp.name.clone(),
            source: source.ok(),
            fused: fused.ok(),
            equal,
        });
    }

    Verdict {
        graph: audit.graph.clone(),
        passed: violations.is_empty(),
        violations,
        spaces,
    }
}
