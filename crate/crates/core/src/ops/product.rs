use crate::ops::OpError;
use crate::relation::{Record, Side};

/// `(f ⊎ g)`: applies `f` to records tagged left and `g` to records tagged
/// right, reading the top path tag.
pub fn disjoint_apply<T, F, G>(r: &Record, f: F, g: G) -> Result<T, OpError>
where
    F: FnOnce(&Record) -> T,
    G: FnOnce(&Record) -> T,
{
    match r.top_tag().map(|t| t.side) {
        Some(Side::Inl) => Ok(f(r)),
        Some(Side::Inr) => Ok(g(r)),
        None => Err(OpError::UntagMissing(r.pids().iter().copied().collect())),
    }
}

/// `(f △ g)`: applies both functions to the same record.
pub fn parallel_apply<A, B, F, G>(r: &Record, f: F, g: G) -> (A, B)
where
    F: FnOnce(&Record) -> A,
    G: FnOnce(&Record) -> B,
{
    (f(r), g(r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relation::{row, PathTag};
    use crate::value::{FieldValue, Pid};

    fn rec() -> Record {
        Record::new(Pid(1), row([("x", FieldValue::Integer(3))]))
    }

    #[test]
    fn disjoint_apply_dispatches_on_tag() {
        let mut r = rec();
        r.push_tag(PathTag::new(Side::Inl, "u"));
        assert_eq!(disjoint_apply(&r, |_| "f", |_| "g"), Ok("f"));
        r.pop_tag();
        r.push_tag(PathTag::new(Side::Inr, "u"));
        assert_eq!(disjoint_apply(&r, |_| "f", |_| "g"), Ok("g"));
        r.pop_tag();
        assert!(disjoint_apply(&r, |_| "f", |_| "g").is_err());
    }

    #[test]
    fn parallel_apply_pairs_results() {
        let r = rec();
        let (a, b) = parallel_apply(&r, |r| r.get("x").cloned(), |r| r.pids().len());
        assert_eq!(a, Some(FieldValue::Integer(3)));
        assert_eq!(b, 1);
    }
}
