use crate::ops::OpError;
use crate::relation::{PathTag, Record, Relation, Side};

/// `r1 ⊎ r2`: every record is tagged with the side it came from, so the
/// union can always be split again.
///
/// Both inputs must carry the same fields; the output uses `r1`'s column
/// order.
pub fn tagged_union(r1: Relation, r2: Relation, label: &str) -> Result<Relation, OpError> {
    if !r1.schema().same_fields(r2.schema()) {
        return Err(OpError::SchemaMismatch(format!(
            "tagged union of {} and {}",
            r1.schema(),
            r2.schema()
        )));
    }
    let (schema, left) = r1.into_parts();
    let right = r2.into_rows();
    let mut rows = Vec::with_capacity(left.len() + right.len());
    for mut r in left {
        r.push_tag(PathTag::new(Side::Inl, label));
        rows.push(r);
    }
    for mut r in right {
        r.push_tag(PathTag::new(Side::Inr, label));
        rows.push(r);
    }
    Ok(Relation::from_records_unchecked(schema, rows))
}

/// Inverse of [`tagged_union`]: pops one tag from every record and routes
/// it back to its side.
pub fn untag(rel: Relation) -> Result<(Relation, Relation), OpError> {
    let (schema, rows) = rel.into_parts();
    let mut left = Vec::new();
    let mut right = Vec::new();
    for mut r in rows {
        match r.pop_tag() {
            Some(PathTag { side: Side::Inl, .. }) => left.push(r),
            Some(PathTag { side: Side::Inr, .. }) => right.push(r),
            None => return Err(OpError::UntagMissing(r.pids().iter().copied().collect())),
        }
    }
    Ok((
        Relation::from_records_unchecked(schema.clone(), left),
        Relation::from_records_unchecked(schema, right),
    ))
}

/// Splits an untagged union using an origin function instead of tags.
pub fn untag_by<F>(rel: Relation, origin: F) -> (Relation, Relation)
where
    F: Fn(&Record) -> Side,
{
    let (schema, rows) = rel.into_parts();
    let (left, right): (Vec<_>, Vec<_>) = rows.into_iter().partition(|r| origin(r) == Side::Inl);
    (
        Relation::from_records_unchecked(schema.clone(), left),
        Relation::from_records_unchecked(schema, right),
    )
}

/// Drops the top tag of every record. The side is still recoverable from
/// provenance, which is what keeps this information-preserving.
pub fn strip_tags(rel: Relation) -> Result<Relation, OpError> {
    let (schema, rows) = rel.into_parts();
    let rows = rows
        .into_iter()
        .map(|mut r| match r.pop_tag() {
            Some(_) => Ok(r),
            None => Err(OpError::UntagMissing(r.pids().iter().copied().collect())),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Relation::from_records_unchecked(schema, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relation::{ingest_with, row, PidAllocator, Schema, SemType};
    use crate::value::FieldValue;

    fn pair() -> (Relation, Relation) {
        let s = Schema::of(&[("a", SemType::Integer), ("kind", SemType::Text)]);
        let mut alloc = PidAllocator::new();
        let a = ingest_with(
            &mut alloc,
            s.clone(),
            vec![
                row([("a", FieldValue::Integer(1)), ("kind", "x".into())]),
                row([("a", FieldValue::Integer(1)), ("kind", "x".into())]),
            ],
        )
        .unwrap();
        let b = ingest_with(&mut alloc, s, vec![row([("a", FieldValue::Integer(2)), ("kind", "y".into())])]).unwrap();
        (a, b)
    }

    #[test]
    fn untag_inverts_tagged_union() {
        let (a, b) = pair();
        let u = tagged_union(a.clone(), b.clone(), "u").unwrap();
        assert_eq!(u.len(), 3);
        assert_eq!(untag(u).unwrap(), (a, b));
    }

    #[test]
    fn empty_left_tags_everything_inr() {
        let (a, b) = pair();
        let empty = Relation::empty(a.schema().clone());
        let u = tagged_union(empty, b, "u").unwrap();
        assert!(u.rows().iter().all(|r| r.top_tag().unwrap().side == Side::Inr));
    }

    #[test]
    fn origin_function_replaces_tags() {
        let (a, b) = pair();
        let u = strip_tags(tagged_union(a.clone(), b.clone(), "u").unwrap()).unwrap();
        let (l, r) = untag_by(u, |r| {
            if r.get("kind") == Some(&FieldValue::text("x")) {
                Side::Inl
            } else {
                Side::Inr
            }
        });
        assert_eq!((l, r), (a, b));
    }

    #[test]
    fn untag_without_tag_fails() {
        let (a, _) = pair();
        assert!(matches!(untag(a.clone()), Err(OpError::UntagMissing(_))));
        assert!(matches!(strip_tags(a), Err(OpError::UntagMissing(_))));
    }

    #[test]
    fn schemas_must_match() {
        let (a, _) = pair();
        let other = ingest_with(&mut PidAllocator::starting_at(10), Schema::of(&[("z", SemType::Integer)]), vec![]).unwrap();
        assert!(matches!(tagged_union(a, other, "u"), Err(OpError::SchemaMismatch(_))));
    }
}
