//! Information-preserving operations.
//!
//! None of these drop a record: filters become partitions, joins become
//! three-way splits, projection moves fields aside instead of deleting them
//! and aggregation keeps the provenance of every contributing row.

mod aggregate;
mod enrich;
mod join;
mod partition;
mod product;
mod project;
mod union;

use thiserror::Error;

use crate::monoid::MonoidError;
use crate::relation::RelationError;
use crate::value::Pid;

pub use aggregate::{aggregate, aggregate_schema, drill_down, AggKind, AggSpec, COUNT_FIELD};
pub use enrich::{emap, emap_with, fmap, fmap_schema, fmap_with, totalize, FieldDef, Totalized};
pub use join::{cartesian, join_schema, outer_join, JoinKey, JoinOutput};
pub use partition::{membership, partition, partition_by, MembershipSplit};
pub use product::{disjoint_apply, parallel_apply};
pub use project::{dedup, lossless_project, rename, rename_schema};
pub use union::{strip_tags, tagged_union, untag, untag_by};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OpError {
    #[error("unknown field `{0}`")]
    UnknownField(String),
    #[error("join column `{0}` is not in the input schema")]
    JoinColumnMissing(String),
    #[error("field `{0}` would appear twice in the output")]
    FieldCollision(String),
    #[error("rename produces duplicate field `{0}`")]
    CollisionAfterRename(String),
    #[error("function produced a missing value without a reason for `{0}`")]
    FnNotTotal(String),
    #[error("error enrichment may not write business field `{0}`")]
    ForbiddenFieldWrite(String),
    #[error("partial function failed inside its declared domain (record {0:?})")]
    DomainPredUnsound(Vec<Pid>),
    #[error("record {0:?} has no path tag to remove")]
    UntagMissing(Vec<Pid>),
    #[error("no group matches {0}")]
    UnknownGroup(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("type error: {0}")]
    Type(String),
    #[error(transparent)]
    Monoid(#[from] MonoidError),
    #[error(transparent)]
    Relation(#[from] RelationError),
}
