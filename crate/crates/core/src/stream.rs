//! The two-track value carried by every pipeline wire: records still on the
//! correct path, and the error trace of records diverted from it.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::relation::{Record, Relation, Schema};
use crate::value::{FieldValue, Pid};

/// Field names reserved for the error trace.
pub const ERROR_STAGE: &str = "error_stage";
pub const ERROR_REASON: &str = "error_reason";

/// A record diverted from the correct path.
///
/// The record itself is frozen at the moment of diversion. Only
/// `annotations` can grow afterwards, and only through `emap`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub record: Record,
    pub stage: String,
    pub reason: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub annotations: BTreeMap<String, FieldValue>,
}

impl ErrorRecord {
    pub fn new(record: Record, stage: impl Into<String>, reason: impl Into<String>) -> Self {
        ErrorRecord {
            record,
            stage: stage.into(),
            reason: reason.into(),
            annotations: BTreeMap::new(),
        }
    }

    pub fn pids(&self) -> &BTreeSet<Pid> {
        self.record.pids()
    }

    /// Looks a field up among frozen fields, then annotations, then the
    /// two reserved trace fields.
    pub fn get(&self, field: &str) -> Option<FieldValue> {
        if let Some(v) = self.record.get(field) {
            return Some(v.clone());
        }
        if let Some(v) = self.annotations.get(field) {
            return Some(v.clone());
        }
        match field {
            ERROR_STAGE => Some(FieldValue::Text(self.stage.clone())),
            ERROR_REASON => Some(FieldValue::Text(self.reason.clone())),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stream {
    pub correct: Relation,
    pub errors: Vec<ErrorRecord>,
}

impl From<Relation> for Stream {
    fn from(correct: Relation) -> Self {
        Stream {
            correct,
            errors: Vec::new(),
        }
    }
}

impl Stream {
    pub fn new(correct: Relation, errors: Vec<ErrorRecord>) -> Self {
        Stream { correct, errors }
    }

    pub fn empty(schema: Schema) -> Self {
        Relation::empty(schema).into()
    }

    pub fn correct_pids(&self) -> BTreeSet<Pid> {
        self.correct.pids()
    }

    pub fn error_pids(&self) -> BTreeSet<Pid> {
        self.errors
            .iter()
            .flat_map(|e| e.pids().iter().copied())
            .collect()
    }

    pub fn pids(&self) -> BTreeSet<Pid> {
        let mut p = self.correct_pids();
        p.extend(self.error_pids());
        p
    }

    /// Moves records onto the error track, stamped with stage and reason.
    pub fn divert<I>(&mut self, records: I, stage: &str, reason: &str)
    where
        I: IntoIterator<Item = Record>,
    {
        self.errors
            .extend(records.into_iter().map(|r| ErrorRecord::new(r, stage, reason)));
    }
}
