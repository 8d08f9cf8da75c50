//! Information-preserving data pipelines.
//!
//! Data is described by data spaces (a carrier, an information order and a
//! fusion monoid). Operations never drop records: failures are partitioned
//! onto an error track, every record carries the provenance ids of its
//! inputs, and a conservation check verifies that each record that entered a
//! pipeline is accounted for at exactly one sink.

pub mod cli;
pub mod decimal;
pub mod expr;
pub mod io;
pub mod monoid;
pub mod ops;
pub mod pipeline;
pub mod ra;
pub mod relation;
pub mod space;
pub mod stream;
pub mod value;

pub use decimal::Decimal;
pub use expr::{Expr, Predicate};
pub use monoid::{InformationMonoid, MonoidElement, MonoidKind};
pub use relation::{Column, PidAllocator, Record, Relation, Schema, SemType};
pub use stream::{ErrorRecord, Stream};
pub use value::{FieldValue, Pid};
