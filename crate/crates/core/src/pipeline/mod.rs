//! Pipeline graphs, validation, execution, conservation audit and dashboard.

mod audit;
mod dashboard;
mod graph;
mod run;
mod validate;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::space::MeasureSpec;

pub use audit::{conservation_check, membership_classes, space_measure, ConservationViolation, SpaceCheck, Verdict};
pub use dashboard::{render_dashboard, Dashboard, ErrorGroup, MembershipClass, SinkSummary};
pub use graph::{Node, Op, PipelineGraph, PortRef, SinkRole, Wire};
pub use run::{run, ErrorStamp, PortLedger, RunAudit, RunError, RunOutput, SinkLedger, SinkOutput, StageLedger};
pub use validate::{validate, Violation};

/// A named data space whose measure is audited at every run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceDecl {
    pub name: String,
    #[serde(flatten)]
    pub measure: MeasureSpec,
}

impl SpaceDecl {
    pub fn new(name: impl Into<String>, measure: MeasureSpec) -> Self {
        SpaceDecl {
            name: name.into(),
            measure,
        }
    }
}

/// Where a named input comes from: a CSV file and its schema sidecar.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceDecl {
    pub file: String,
    /// Defaults to the CSV path with `.schema.json` in place of `.csv`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
}

impl SourceDecl {
    pub fn schema_path(&self) -> String {
        self.schema.clone().unwrap_or_else(|| {
            let stem = self.file.strip_suffix(".csv").unwrap_or(&self.file);
            format!("{stem}.schema.json")
        })
    }
}

/// A pipeline description file: shared inputs, audited spaces and one or
/// more report graphs over those inputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineDocument {
    #[serde(default)]
    pub sources: BTreeMap<String, SourceDecl>,
    #[serde(default)]
    pub spaces: Vec<SpaceDecl>,
    #[serde(default)]
    pub graphs: Vec<PipelineGraph>,
}
