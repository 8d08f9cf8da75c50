//! Translates a generated relational query into a pipeline graph and checks
//! it against the reference evaluator, then shows a broken translation failing.

use std::collections::BTreeMap;

use data_accounting::ra::{equivalence_check, equivalence_check_with, random_case, translate, Mutant, RAExpr};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let case = random_case(11);
    println!("query: {}", case.expr);
    let schemas: BTreeMap<_, _> = case.bases.iter().map(|(k, v)| (k.clone(), v.schema().clone())).collect();
    let q = translate(&case.expr, &schemas)?;
    println!("pipeline: {} nodes, {} wires", q.graph.nodes.len(), q.graph.wires.len());
    let e = equivalence_check(&case.expr, &case.bases);
    println!("agrees: {}, conserves: {}", e.passed, e.conservation_passed);

    let base = case.bases.keys().next().unwrap().clone();
    let union = RAExpr::Union { left: Box::new(RAExpr::base(&base)), right: Box::new(RAExpr::base(&base)) };
    let broken = equivalence_check_with(&union, &case.bases, Mutant::UnionWithoutDedup);
    println!("{union} without dedup: {}", broken.first_divergence.unwrap_or_else(|| "no divergence".into()));
    Ok(())
}
