//! CSV ingestion with schema sidecars, pipeline documents, and sink output.

use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decimal::Decimal;
use crate::pipeline::{PipelineDocument, SinkOutput};
use crate::relation::{Column, PidAllocator, Record, Relation, RelationError, Schema, SemType};
use crate::stream::{ErrorRecord, Stream};
use crate::value::FieldValue;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{0}")]
    Schema(String),
    #[error(transparent)]
    Relation(#[from] RelationError),
}

fn default_sentinels() -> Vec<String> {
    ["unknown", "closed", "priceless"].iter().map(|s| s.to_string()).collect()
}

/// One column of a schema sidecar. A quantity column takes its unit either
/// from `unit` or, per row, from the column named by `unit_column`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: SemType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit_column: Option<String>,
}

/// The `<name>.schema.json` document next to a CSV file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaDoc {
    pub columns: Vec<ColumnSpec>,
    /// Cell strings read as `Missing(<cell>)`. Empty cells are always
    /// `Missing("empty")`.
    #[serde(default = "default_sentinels")]
    pub sentinels: Vec<String>,
}

impl SchemaDoc {
    pub fn schema(&self) -> Result<Schema, IoError> {
        for c in &self.columns {
            if let Some(u) = &c.unit_column {
                if c.ty != SemType::Quantity {
                    return Err(IoError::Schema(format!("`{}` has a unit column but is not a quantity", c.name)));
                }
                if !self.columns.iter().any(|o| &o.name == u) {
                    return Err(IoError::Schema(format!("unit column `{u}` of `{}` is not declared", c.name)));
                }
            }
            if matches!(c.ty, SemType::Summary) {
                return Err(IoError::Schema(format!("`{}`: summary columns cannot be ingested", c.name)));
            }
        }
        Ok(Schema::new(
            self.columns
                .iter()
                .map(|c| Column {
                    name: c.name.clone(),
                    ty: c.ty,
                    unit: c.unit.clone(),
                })
                .collect(),
        )?)
    }

    fn cell(&self, spec: &ColumnSpec, raw: &str, row: &BTreeMap<&str, &str>) -> Result<FieldValue, String> {
        let t = raw.trim();
        if t.is_empty() {
            return Ok(FieldValue::missing("empty"));
        }
        if self.sentinels.iter().any(|s| s == t) {
            return Ok(FieldValue::missing(t));
        }
        let bad = |e: &dyn std::fmt::Display| format!("`{}`: {e}", spec.name);
        match spec.ty {
            SemType::Integer => t.parse::<i64>().map(FieldValue::Integer).map_err(|e| bad(&e)),
            SemType::Decimal => t.parse::<Decimal>().map(FieldValue::Decimal).map_err(|e| bad(&e)),
            SemType::Text | SemType::Any => Ok(FieldValue::text(t)),
            SemType::Quantity => {
                let amount = t.parse::<Decimal>().map_err(|e| bad(&e))?;
                let unit = match (&spec.unit, &spec.unit_column) {
                    (_, Some(uc)) => row.get(uc.as_str()).map(|s| s.trim()).unwrap_or(""),
                    (Some(u), None) => u.as_str(),
                    (None, None) => "",
                };
                if unit.is_empty() || self.sentinels.iter().any(|s| s == unit) {
                    return Err(bad(&"no unit"));
                }
                Ok(FieldValue::quantity(amount, unit))
            }
            SemType::Summary => Err(bad(&"summary columns cannot be ingested")),
        }
    }
}

fn read_file(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::File {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_schema(path: &Path) -> Result<SchemaDoc, IoError> {
    serde_json::from_str(&read_file(path)?).map_err(|source| IoError::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_document(path: &Path) -> Result<PipelineDocument, IoError> {
    serde_json::from_str(&read_file(path)?).map_err(|source| IoError::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads CSV text into a stream. Rows that fail to parse do not abort the
/// load: they become error records at stage `ingest:<name>`, keeping the raw
/// cells as text.
pub fn read_csv<R: Read>(
    reader: R,
    doc: &SchemaDoc,
    name: &str,
    alloc: &mut PidAllocator,
    path: &Path,
) -> Result<Stream, IoError> {
    let schema = doc.schema()?;
    let csv_err = |source| IoError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(|h| h.trim().to_string()).collect();
    for c in &doc.columns {
        if !headers.contains(&c.name) {
            return Err(IoError::Schema(format!("{}: column `{}` not in header", path.display(), c.name)));
        }
    }
    for h in &headers {
        if !doc.columns.iter().any(|c| &c.name == h) {
            return Err(IoError::Schema(format!("{}: header `{h}` not declared in schema", path.display())));
        }
    }
    let stage = format!("ingest:{name}");
    let mut correct = Vec::new();
    let mut errors = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let raw: BTreeMap<&str, &str> = headers.iter().map(String::as_str).zip(rec.iter()).collect();
        let parsed: Result<BTreeMap<String, FieldValue>, String> = doc
            .columns
            .iter()
            .map(|c| doc.cell(c, raw.get(c.name.as_str()).copied().unwrap_or(""), &raw).map(|v| (c.name.clone(), v)))
            .collect();
        // Pids follow file order whether or not the row parses.
        let pid = alloc.next_pid();
        match parsed {
            Ok(row) => correct.push(Record::new(pid, row)),
            Err(reason) => {
                let fields = raw.iter().map(|(k, v)| (k.to_string(), FieldValue::text(*v))).collect();
                errors.push(ErrorRecord::new(Record::new(pid, fields), stage.clone(), format!("unparseable {reason}")));
            }
        }
    }
    Ok(Stream {
        correct: Relation::from_records(schema, correct)?,
        errors,
    })
}

pub fn load_csv(path: &Path, doc: &SchemaDoc, name: &str, alloc: &mut PidAllocator) -> Result<Stream, IoError> {
    let file = fs::File::open(path).map_err(|source| IoError::File {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, doc, name, alloc, path)
}

/// Loads the schema sidecar of every declared source.
pub fn load_source_schemas(doc: &PipelineDocument, data_dir: &Path) -> Result<BTreeMap<String, Schema>, IoError> {
    doc.sources
        .iter()
        .map(|(name, s)| Ok((name.clone(), load_schema(&data_dir.join(s.schema_path()))?.schema()?)))
        .collect()
}

/// Loads every declared source, in name order, from one shared allocator.
pub fn load_sources(
    doc: &PipelineDocument,
    data_dir: &Path,
    alloc: &mut PidAllocator,
) -> Result<BTreeMap<String, Stream>, IoError> {
    let mut out = BTreeMap::new();
    for (name, s) in &doc.sources {
        let schema = load_schema(&data_dir.join(s.schema_path()))?;
        out.insert(name.clone(), load_csv(&data_dir.join(&s.file), &schema, name, alloc)?);
    }
    Ok(out)
}

/// Loads a pipeline document, binds each graph's source schemas and loads
/// every declared input. `data_dir` defaults to the document's directory.
pub fn load_pipeline(
    path: &Path,
    data_dir: Option<&Path>,
) -> Result<(PipelineDocument, BTreeMap<String, Stream>), IoError> {
    let dir = data_dir
        .map(Path::to_path_buf)
        .unwrap_or_else(|| path.parent().map(Path::to_path_buf).unwrap_or_default());
    let mut doc = load_document(path)?;
    let schemas = load_source_schemas(&doc, &dir)?;
    for g in &mut doc.graphs {
        g.bind_schemas(&schemas);
    }
    let inputs = load_sources(&doc, &dir, &mut PidAllocator::new())?;
    Ok((doc, inputs))
}

fn cell_text(v: &FieldValue) -> String {
    v.to_string()
}

/// Renders a relation as CSV, in schema column order.
pub fn relation_csv(rel: &Relation) -> Result<String, IoError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let path = PathBuf::from("<memory>");
    let csv_err = |source| IoError::Csv {
        path: path.clone(),
        source,
    };
    let names: Vec<&str> = rel.schema().names().collect();
    w.write_record(&names).map_err(csv_err)?;
    for r in rel.rows() {
        let cells: Vec<String> = names.iter().map(|n| r.get(n).map(cell_text).unwrap_or_default()).collect();
        w.write_record(&cells).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| IoError::Schema(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Renders error records as CSV: stage, reason, provenance ids, and the
/// frozen record and annotations as JSON objects.
pub fn errors_csv(errors: &[ErrorRecord]) -> Result<String, IoError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |source| IoError::Csv {
        path: PathBuf::from("<memory>"),
        source,
    };
    w.write_record(["error_stage", "error_reason", "pids", "record", "annotations"])
        .map_err(csv_err)?;
    for e in errors {
        let pids: Vec<String> = e.pids().iter().map(|p| p.0.to_string()).collect();
        let record: BTreeMap<&String, String> = e.record.relevant().iter().map(|(k, v)| (k, cell_text(v))).collect();
        let notes: BTreeMap<&String, String> = e.annotations.iter().map(|(k, v)| (k, cell_text(v))).collect();
        w.write_record([
            e.stage.clone(),
            e.reason.clone(),
            pids.join(" "),
            serde_json::to_string(&record).expect("string map serializes"),
            serde_json::to_string(&notes).expect("string map serializes"),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| IoError::Schema(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Writes `contents` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), IoError> {
    let file_err = |source| IoError::File {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(file_err)?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(file_err)?;
    fs::rename(&tmp, path).map_err(file_err)
}

/// Writes `<sink>.csv` and, when the sink holds error records,
/// `<sink>.errors.csv` into `dir`.
pub fn write_sink(dir: &Path, sink: &SinkOutput) -> Result<Vec<PathBuf>, IoError> {
    let mut written = Vec::new();
    let p = dir.join(format!("{}.csv", sink.name));
    write_atomic(&p, &relation_csv(&sink.correct)?)?;
    written.push(p);
    if !sink.errors.is_empty() {
        let p = dir.join(format!("{}.errors.csv", sink.name));
        write_atomic(&p, &errors_csv(&sink.errors)?)?;
        written.push(p);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc() -> SchemaDoc {
        serde_json::from_str(
            r#"{"columns": [
                {"name": "Item", "type": "text"},
                {"name": "Price", "type": "quantity", "unit_column": "Currency"},
                {"name": "Currency", "type": "text"},
                {"name": "Qty", "type": "integer"}
            ]}"#,
        )
        .unwrap()
    }

    fn read(text: &str) -> Stream {
        read_csv(text.as_bytes(), &doc(), "t", &mut PidAllocator::new(), Path::new("t.csv")).unwrap()
    }

    #[test]
    fn sentinels_become_missing() {
        let s = read("Item,Price,Currency,Qty\nA,1.5,USD,2\nB,priceless,USD,\nC,closed,EUR,1\n");
        assert_eq!(s.correct.len(), 3);
        let rows = s.correct.rows();
        assert_eq!(rows[0].get("Price"), Some(&FieldValue::quantity("1.5".parse().unwrap(), "USD")));
        assert_eq!(rows[1].get("Price"), Some(&FieldValue::missing("priceless")));
        assert_eq!(rows[1].get("Qty"), Some(&FieldValue::missing("empty")));
        assert_eq!(rows[2].get("Price"), Some(&FieldValue::missing("closed")));
    }

    #[test]
    fn bad_rows_become_ingest_errors_in_file_order() {
        let s = read("Item,Price,Currency,Qty\nA,1,USD,2\nB,1.23456,USD,1\nC,2,USD,x\nD,3,,1\nE,1,USD,1\n");
        assert_eq!(s.correct.len(), 2);
        assert_eq!(s.errors.len(), 3);
        assert!(s.errors.iter().all(|e| e.stage == "ingest:t"));
        let bad: Vec<u64> = s.errors.iter().map(|e| e.pids().iter().next().unwrap().0).collect();
        assert_eq!(bad, vec![2, 3, 4]);
        assert_eq!(s.correct.rows()[1].pids().iter().next().unwrap().0, 5);
    }

    #[test]
    fn header_must_match_schema() {
        let r = read_csv("Item,Price\nA,1\n".as_bytes(), &doc(), "t", &mut PidAllocator::new(), Path::new("t.csv"));
        assert!(matches!(r, Err(IoError::Schema(_))));
    }

    #[test]
    fn relation_round_trips_to_csv_text() {
        let s = read("Item,Price,Currency,Qty\n\"A, b\",1,USD,2\n");
        let out = relation_csv(&s.correct).unwrap();
        assert_eq!(out, "Item,Price,Currency,Qty\n\"A, b\",1 USD,USD,2\n");
    }
}
