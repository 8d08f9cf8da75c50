//! Command-line front end: `run`, `check` and `fuzz`.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::io::{load_document, load_source_schemas, load_sources, write_atomic, write_sink};
use crate::pipeline::{conservation_check, render_dashboard, run, validate, PipelineDocument};
use crate::ra::{equivalence_check_with, random_case, Mutant, OPERATOR_KINDS};
use crate::relation::PidAllocator;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DIVERGENCE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_CONSERVATION: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Structured,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MutantArg {
    UnionWithoutDedup,
}

#[derive(Debug, Parser)]
#[command(name = "data-accounting", version, about = "Lossless data pipelines with conservation audits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every graph of a pipeline file, writing sinks, dashboards and audits.
    Run {
        pipeline: PathBuf,
        /// Directory holding the CSV inputs. Defaults to the pipeline's directory.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Validate a pipeline file without running it.
    Check {
        pipeline: PathBuf,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Compare translated relational queries with the reference evaluator.
    Fuzz {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        iterations: u64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long, value_enum, hide = true)]
        mutant: Option<MutantArg>,
    },
}

/// Parses `std::env::args` and runs the command.
pub fn main() -> i32 {
    let cli = Cli::parse();
    let (mut out, mut err) = (std::io::stdout().lock(), std::io::stderr().lock());
    dispatch(cli.command, &mut out, &mut err)
}

pub fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match cmd {
        Command::Run {
            pipeline,
            data,
            out: dir,
            format,
        } => cmd_run(&pipeline, data.as_deref(), &dir, format, out, err),
        Command::Check { pipeline, data, format } => cmd_check(&pipeline, data.as_deref(), format, out, err),
        Command::Fuzz {
            seed,
            iterations,
            format,
            mutant,
        } => {
            let m = match mutant {
                Some(MutantArg::UnionWithoutDedup) => Mutant::UnionWithoutDedup,
                None => Mutant::None,
            };
            cmd_fuzz(seed, iterations, format, m, out)
        }
    }
}

fn data_dir(pipeline: &Path, data: Option<&Path>) -> PathBuf {
    data.map(Path::to_path_buf)
        .unwrap_or_else(|| pipeline.parent().map(Path::to_path_buf).unwrap_or_default())
}

/// Loads the document and binds source schemas, printing diagnostics on
/// failure.
fn prepare(pipeline: &Path, data: &Path, err: &mut dyn Write) -> Option<PipelineDocument> {
    let mut doc = match load_document(pipeline) {
        Ok(d) => d,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return None;
        }
    };
    let schemas = match load_source_schemas(&doc, data) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return None;
        }
    };
    for g in &mut doc.graphs {
        g.bind_schemas(&schemas);
    }
    Some(doc)
}

#[derive(Serialize)]
struct CheckReport<'a> {
    graph: &'a str,
    violations: Vec<String>,
}

fn report_violations(doc: &PipelineDocument, format: Format, out: &mut dyn Write, err: &mut dyn Write) -> bool {
    let mut reports = Vec::new();
    for g in &doc.graphs {
        let violations: Vec<String> = validate(g).iter().map(ToString::to_string).collect();
        reports.push(CheckReport {
            graph: &g.name,
            violations,
        });
    }
    let clean = reports.iter().all(|r| r.violations.is_empty());
    match format {
        Format::Structured => {
            let _ = writeln!(out, "{}", serde_json::to_string_pretty(&reports).expect("report serializes"));
        }
        Format::Text => {
            for r in &reports {
                for v in &r.violations {
                    let _ = writeln!(err, "{}: {v}", r.graph);
                }
            }
        }
    }
    clean
}

/// Validates every graph; exit 0 when all are valid, 2 otherwise.
pub fn cmd_check(pipeline: &Path, data: Option<&Path>, format: Format, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let Some(doc) = prepare(pipeline, &data_dir(pipeline, data), err) else {
        return EXIT_INVALID;
    };
    if doc.graphs.is_empty() {
        let _ = writeln!(err, "error: {} declares no graphs", pipeline.display());
        return EXIT_INVALID;
    }
    if !report_violations(&doc, format, out, err) {
        return EXIT_INVALID;
    }
    if format == Format::Text {
        let _ = writeln!(out, "ok: {} graph(s) valid", doc.graphs.len());
    }
    EXIT_OK
}

/// Runs every graph. Writes `<out>/<graph>/<sink>.csv`, `dashboard.txt`,
/// `dashboard.json` and `audit.json`. Exit 2 on invalid input, 3 when a
/// conservation check fails.
pub fn cmd_run(
    pipeline: &Path,
    data: Option<&Path>,
    out_dir: &Path,
    format: Format,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let data = data_dir(pipeline, data);
    let Some(doc) = prepare(pipeline, &data, err) else {
        return EXIT_INVALID;
    };
    if !report_violations(&doc, Format::Text, out, err) {
        return EXIT_INVALID;
    }
    let inputs = match load_sources(&doc, &data, &mut PidAllocator::new()) {
        Ok(i) => i,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_INVALID;
        }
    };
    let mut code = EXIT_OK;
    let mut dashboards = Vec::new();
    for g in &doc.graphs {
        let result = match run(g, &inputs, &doc.spaces) {
            Ok(r) => r,
            Err(e) => {
                let _ = writeln!(err, "{}: {e}", g.name);
                return EXIT_INVALID;
            }
        };
        let dir = out_dir.join(&g.name);
        let verdict = conservation_check(&result.audit);
        let dash = render_dashboard(&result.audit, &result.sinks);
        let mut writes = Vec::new();
        for s in result.sinks.values() {
            writes.push(write_sink(&dir, s).map(|_| ()));
        }
        writes.push(write_atomic(&dir.join("dashboard.txt"), &dash.to_text()));
        writes.push(write_atomic(&dir.join("dashboard.json"), &dash.to_json()));
        writes.push(write_atomic(
            &dir.join("audit.json"),
            &serde_json::to_string_pretty(&result.audit).expect("audit serializes"),
        ));
        writes.push(write_atomic(
            &dir.join("verdict.json"),
            &serde_json::to_string_pretty(&verdict).expect("verdict serializes"),
        ));
        for w in writes {
            if let Err(e) = w {
                let _ = writeln!(err, "error: {e}");
                return EXIT_INVALID;
            }
        }
        if !verdict.passed {
            for v in &verdict.violations {
                let _ = writeln!(err, "{}: conservation violated at {}: {}", g.name, v.stage, v.detail);
            }
            code = EXIT_CONSERVATION;
        }
        dashboards.push(dash);
    }
    match format {
        Format::Text => {
            for d in &dashboards {
                let _ = writeln!(out, "{}", d.to_text());
            }
        }
        Format::Structured => {
            let _ = writeln!(out, "{}", serde_json::to_string_pretty(&dashboards).expect("dashboards serialize"));
        }
    }
    code
}

#[derive(Debug, Serialize)]
struct FuzzReport {
    seed: u64,
    iterations: u64,
    passed: u64,
    kinds: BTreeMap<String, u64>,
    counterexample: Option<Counterexample>,
}

#[derive(Debug, Serialize)]
struct Counterexample {
    case_seed: u64,
    expr: String,
    divergence: Option<String>,
    conservation_passed: bool,
}

/// Checks `iterations` generated queries, case `i` using seed `seed + i`.
/// Stops at the first divergence (exit 1) or conservation failure (exit 3).
pub fn cmd_fuzz(seed: u64, iterations: u64, format: Format, mutant: Mutant, out: &mut dyn Write) -> i32 {
    let mut kinds: BTreeMap<String, u64> = OPERATOR_KINDS.iter().map(|k| (k.to_string(), 0)).collect();
    let mut passed = 0;
    let mut counterexample = None;
    let mut code = EXIT_OK;
    for i in 0..iterations {
        let case_seed = seed.wrapping_add(i);
        let case = random_case(case_seed);
        let seen: BTreeSet<&str> = case.expr.kinds();
        for k in seen {
            if let Some(n) = kinds.get_mut(k) {
                *n += 1;
            }
        }
        let e = equivalence_check_with(&case.expr, &case.bases, mutant);
        if e.passed && e.conservation_passed {
            passed += 1;
            continue;
        }
        code = if e.passed { EXIT_CONSERVATION } else { EXIT_DIVERGENCE };
        counterexample = Some(Counterexample {
            case_seed,
            expr: case.expr.to_string(),
            divergence: e.first_divergence,
            conservation_passed: e.conservation_passed,
        });
        break;
    }
    let report = FuzzReport {
        seed,
        iterations,
        passed,
        kinds,
        counterexample,
    };
    match format {
        Format::Structured => {
            let _ = writeln!(out, "{}", serde_json::to_string_pretty(&report).expect("report serializes"));
        }
        Format::Text => {
            let _ = writeln!(out, "fuzz seed {seed}: {passed}/{iterations} cases agree");
            let cover: Vec<String> = report.kinds.iter().map(|(k, n)| format!("{k}={n}")).collect();
            let _ = writeln!(out, "operator coverage: {}", cover.join(" "));
            if let Some(c) = &report.counterexample {
                let _ = writeln!(out, "counterexample (case seed {}): {}", c.case_seed, c.expr);
                if let Some(d) = &c.divergence {
                    let _ = writeln!(out, "  {d}");
                }
                if !c.conservation_passed {
                    let _ = writeln!(out, "  conservation check failed");
                }
            }
        }
    }
    code
}
