//! Per-run summary: what reached each sink, what was diverted and why.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;

use crate::monoid::MonoidElement;
use crate::pipeline::audit::{membership_classes, space_measure};
use crate::pipeline::graph::SinkRole;
use crate::pipeline::run::{label_of, RunAudit, SinkOutput};
use crate::value::Pid;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SinkSummary {
    pub name: String,
    pub role: SinkRole,
    pub rows: usize,
    pub error_records: usize,
    pub pids: usize,
    pub measures: BTreeMap<String, MonoidElement>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ErrorGroup {
    pub stage: String,
    pub reason: String,
    pub records: usize,
    pub pids: usize,
    pub labels: Vec<String>,
    pub summaries: BTreeMap<String, MonoidElement>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MembershipClass {
    pub sinks: Vec<String>,
    pub pids: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Dashboard {
    pub graph: String,
    pub ingested: usize,
    pub sinks: Vec<SinkSummary>,
    pub errors: Vec<ErrorGroup>,
    pub membership: Vec<MembershipClass>,
    pub accounted: Vec<String>,
    pub unaccounted: Vec<String>,
}

fn measures(audit: &RunAudit, pids: &BTreeSet<Pid>) -> BTreeMap<String, MonoidElement> {
    audit
        .spaces
        .iter()
        .filter_map(|s| space_measure(audit, s, pids).ok().map(|m| (s.name.clone(), m)))
        .collect()
}

fn labels(audit: &RunAudit, pids: &BTreeSet<Pid>) -> Vec<String> {
    let Some(field) = &audit.label_field else {
        return Vec::new();
    };
    let set: BTreeSet<String> = pids
        .iter()
        .filter_map(|p| audit.origin.get(p))
        .filter_map(|r| label_of(r, field))
        .collect();
    set.into_iter().collect()
}

/// Builds the dashboard. Counts come from the sink relations themselves and
/// measures from the audit's origin records.
pub fn render_dashboard(audit: &RunAudit, sinks: &BTreeMap<String, SinkOutput>) -> Dashboard {
    let mut summaries = Vec::new();
    let mut groups: BTreeMap<(String, String), (usize, BTreeSet<Pid>)> = BTreeMap::new();
    let mut accounted = BTreeSet::new();
    let mut unaccounted = BTreeSet::new();
    for (name, s) in sinks {
        let mut pids = s.correct.pids();
        for e in &s.errors {
            pids.extend(e.pids().iter().copied());
            let g = groups.entry((e.stage.clone(), e.reason.clone())).or_default();
            g.0 += 1;
            g.1.extend(e.pids().iter().copied());
            unaccounted.extend(e.pids().iter().copied());
        }
        if s.role == SinkRole::Report {
            accounted.extend(s.correct.pids());
        }
        summaries.push(SinkSummary {
            name: name.clone(),
            role: s.role,
            rows: s.correct.len(),
            error_records: s.errors.len(),
            pids: pids.len(),
            measures: measures(audit, &pids),
        });
    }
    let errors = groups
        .into_iter()
        .map(|((stage, reason), (records, pids))| ErrorGroup {
            stage,
            reason,
            records,
            pids: pids.len(),
            labels: labels(audit, &pids),
            summaries: measures(audit, &pids),
        })
        .collect();
    let membership = membership_classes(audit)
        .into_iter()
        .map(|(sinks, pids)| MembershipClass {
            sinks: sinks.into_iter().collect(),
            pids: pids.len(),
        })
        .collect();
    Dashboard {
        graph: audit.graph.clone(),
        ingested: audit.source_pids().len(),
        sinks: summaries,
        errors,
        membership,
        accounted: labels(audit, &accounted),
        unaccounted: labels(audit, &unaccounted),
    }
}

impl Dashboard {
    /// Human-readable table.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "pipeline {}", self.graph);
        let _ = writeln!(out, "ingested records: {}", self.ingested);
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<24} {:<10} {:>8} {:>8} {:>8}", "sink", "role", "rows", "errors", "pids");
        for s in &self.sinks {
            let role = match s.role {
                SinkRole::Report => "report",
                SinkRole::Error => "error",
                SinkRole::Auxiliary => "auxiliary",
            };
            let _ = writeln!(out, "{:<24} {:<10} {:>8} {:>8} {:>8}", s.name, role, s.rows, s.error_records, s.pids);
            for (k, v) in &s.measures {
                let _ = writeln!(out, "    {k}: {v}");
            }
        }
        if !self.errors.is_empty() {
            let _ = writeln!(out);
            let _ = writeln!(out, "{:<24} {:<16} {:>8} {:>8}", "error stage", "reason", "records", "pids");
            for g in &self.errors {
                let _ = writeln!(out, "{:<24} {:<16} {:>8} {:>8}", g.stage, g.reason, g.records, g.pids);
                if !g.labels.is_empty() {
                    let _ = writeln!(out, "    {}", g.labels.join(", "));
                }
                for (k, v) in &g.summaries {
                    let _ = writeln!(out, "    {k}: {v}");
                }
            }
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "membership (pids by set of sinks reached):");
        for m in &self.membership {
            let _ = writeln!(out, "    [{}]: {}", m.sinks.join(", "), m.pids);
        }
        if !self.accounted.is_empty() || !self.unaccounted.is_empty() {
            let _ = writeln!(out);
            let _ = writeln!(out, "accounted: {}", self.accounted.join(", "));
            let _ = writeln!(out, "unaccounted: {}", self.unaccounted.join(", "));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("dashboard serializes")
    }
}
