use std::collections::BTreeSet;

use fixedbitset::FixedBitSet;

use super::paths::{common_lesser_collections, enumerate_up_paths};
use super::product::{product_star_deproject, product_star_project, ProductCollection};
use super::set::{Domain, ElementSet, PrimitiveDomain};
use crate::error::{Error, Result};
use crate::model::{Database, Destination, DimensionPath, ElementId, FieldValue};
use crate::predicate::{is_numeric_path, sum_values};
use crate::value::{Decimal, Value};

pub const INDEPENDENT_WARNING: &str = "independent collections: full target returned";

pub(crate) const NO_PATH_HINT: &str = "use `<-*->` to infer across collections that are not ordered";

fn source_collection(set: &ElementSet) -> Result<&str> {
    set.collection().ok_or_else(|| {
        Error::not_composable(format!(
            "`{}` is a primitive domain; dimension paths start at collections",
            set.domain()
        ))
    })
}

/// Greater elements (or values) reached from `source` along `path`,
/// without duplicates. NULL hops contribute nothing.
pub fn project(db: &Database, source: &ElementSet, path: &DimensionPath) -> Result<ElementSet> {
    let from = source_collection(source)?;
    if path.source() != from {
        return Err(Error::not_composable(format!(
            "path `{path}` starts at `{}`, not `{from}`",
            path.source()
        )));
    }
    let mut cid = db.collection_id(from)?;
    let mut bits = source.bits().expect("element set").clone();
    for dim in path.segments() {
        match &dim.destination {
            Destination::Concept(_) => {
                let refs = db.ref_column(&dim.source, &dim.name)?;
                let mut next = FixedBitSet::with_capacity(db.collection_at(refs.target).len());
                for row in bits.ones() {
                    if let Some(g) = refs.get(row as u32) {
                        next.insert(g as usize);
                    }
                }
                cid = refs.target;
                bits = next;
            }
            Destination::Primitive(ty) => {
                let (loc, _) = db.concept_at(cid).field(&dim.name).expect("validated path");
                let values =
                    bits.ones()
                        .filter_map(|row| match db.field_at(ElementId::new(cid, row as u32), loc) {
                            FieldValue::Value(v) => Some(v.clone()),
                            _ => None,
                        });
                let domain = PrimitiveDomain {
                    concept: dim.source.clone(),
                    field: dim.name.clone(),
                    ty: *ty,
                };
                return Ok(ElementSet::values(domain, values));
            }
        }
    }
    Ok(ElementSet::from_bits(db, cid, bits))
}

/// Elements of `target` that reach a member of `source` along `path`.
pub fn deproject(
    db: &Database,
    source: &ElementSet,
    path: &DimensionPath,
    target: &str,
) -> Result<ElementSet> {
    if path.source() != target {
        return Err(Error::not_composable(format!(
            "path `{path}` starts at `{}`, not `{target}`",
            path.source()
        )));
    }
    let ends_in = match path.destination() {
        Destination::Concept(c) => Domain::Collection(c),
        Destination::Primitive(ty) => {
            let last = path.segments().last().expect("primitive paths have segments");
            Domain::Primitive(PrimitiveDomain {
                concept: last.source.clone(),
                field: last.name.clone(),
                ty,
            })
        }
    };
    let mut segments = path.segments();
    let (mut cid, mut bits) = match (&ends_in, source.domain()) {
        (Domain::Collection(c), Domain::Collection(s)) if c == s => {
            (db.collection_id(c)?, source.bits().expect("element set").clone())
        }
        (Domain::Primitive(want), Domain::Primitive(_)) => {
            let keys: BTreeSet<Value> = source
                .value_iter()
                .filter_map(|v| want.ty.coerce(v.clone()).ok())
                .collect();
            let cid = db.collection_id(&want.concept)?;
            let (loc, _) = db.concept_at(cid).field(&want.field).expect("validated path");
            let n = db.collection_at(cid).len();
            let mut bits = FixedBitSet::with_capacity(n);
            for row in 0..n as u32 {
                if let FieldValue::Value(v) = db.field_at(ElementId::new(cid, row), loc) {
                    if keys.contains(v) {
                        bits.insert(row as usize);
                    }
                }
            }
            segments = &segments[..segments.len() - 1];
            (cid, bits)
        }
        _ => {
            return Err(Error::not_composable(format!(
                "path `{path}` ends in {ends_in}, but the set is in {}",
                source.domain()
            )))
        }
    };
    for dim in segments.iter().rev() {
        let refs = db.ref_column(&dim.source, &dim.name)?;
        let lesser = db.collection_id(&dim.source)?;
        let mut next = FixedBitSet::with_capacity(db.collection_at(lesser).len());
        for row in bits.ones() {
            for &l in refs.lessers(row as u32) {
                next.insert(l as usize);
            }
        }
        cid = lesser;
        bits = next;
    }
    Ok(ElementSet::from_bits(db, cid, bits))
}

/// Union of projections along every path. All paths must share a
/// destination.
pub fn project_union(db: &Database, source: &ElementSet, paths: &[DimensionPath]) -> Result<ElementSet> {
    let mut out: Option<ElementSet> = None;
    for path in paths {
        let part = project(db, source, path)?;
        match &mut out {
            Some(acc) => acc.union_with(&part),
            None => out = Some(part),
        }
    }
    out.ok_or_else(|| Error::not_composable("no paths to project along"))
}

/// Union of de-projections along every path into `target`.
pub fn deproject_union(
    db: &Database,
    source: &ElementSet,
    paths: &[DimensionPath],
    target: &str,
) -> Result<ElementSet> {
    let mut out = ElementSet::empty(db, target)?;
    for path in paths {
        out.union_with(&deproject(db, source, path, target)?);
    }
    Ok(out)
}

/// Projection along all simple paths up to `target`; identity when the
/// set is already in `target`.
pub fn star_project(db: &Database, source: &ElementSet, target: &str) -> Result<ElementSet> {
    let from = source_collection(source)?;
    db.collection_id(target)?;
    if from == target {
        return Ok(source.clone());
    }
    let paths = enumerate_up_paths(db.schema(), from, target);
    if paths.is_empty() {
        return Err(no_path(from, target, NO_PATH_HINT));
    }
    project_union(db, source, &paths)
}

/// De-projection along all simple paths down to `target`; identity when
/// the set is already in `target`.
pub fn star_deproject(db: &Database, source: &ElementSet, target: &str) -> Result<ElementSet> {
    let from = source_collection(source)?;
    db.collection_id(target)?;
    if from == target {
        return Ok(source.clone());
    }
    let paths = enumerate_up_paths(db.schema(), target, from);
    if paths.is_empty() {
        return Err(no_path(from, target, NO_PATH_HINT));
    }
    deproject_union(db, source, &paths, target)
}

fn no_path(from: &str, to: &str, hint: &'static str) -> Error {
    Error::NoPath {
        from: from.to_string(),
        to: to.to_string(),
        hint,
        at: None,
    }
}

/// Elements of `target` that satisfy every source constraint at once.
pub fn intersect_deprojections(db: &Database, sources: &[ElementSet], target: &str) -> Result<ElementSet> {
    let mut out = ElementSet::full(db, target)?;
    for source in sources {
        out.intersect_with(&star_deproject(db, source, target)?);
    }
    Ok(out)
}

/// An explicit common lesser collection for inference.
#[derive(Clone, Copy, Debug)]
pub enum Via<'a> {
    Collection(&'a str),
    Product(&'a ProductCollection),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Inference {
    pub result: ElementSet,
    pub warning: Option<&'static str>,
}

impl Inference {
    fn plain(result: ElementSet) -> Self {
        Inference {
            result,
            warning: None,
        }
    }
}

/// Two-step inference: constraints on `source` propagate down to a common
/// lesser collection and the constrained lesser set propagates up to
/// `target`.
pub fn infer(db: &Database, source: &ElementSet, target: &str, via: Option<Via<'_>>) -> Result<Inference> {
    let from = source_collection(source)?;
    let schema = db.schema();
    db.collection_id(target)?;
    match via {
        Some(Via::Collection(w)) => {
            db.collection_id(w)?;
            if !(schema.is_less_or_equal(w, from) && schema.is_less_or_equal(w, target)) {
                return Err(not_common_lesser(w, from, target));
            }
            let down = star_deproject(db, source, w)?;
            Ok(Inference::plain(star_project(db, &down, target)?))
        }
        Some(Via::Product(p)) => {
            let below = |c: &str| {
                p.factors()
                    .iter()
                    .any(|f| schema.is_less_or_equal(&f.collection, c))
            };
            if !(below(from) && below(target)) {
                return Err(not_common_lesser(p.name(), from, target));
            }
            let members = product_star_deproject(db, source, p)?;
            Ok(Inference::plain(product_star_project(db, &members, target)?))
        }
        None if from == target => Ok(Inference::plain(source.clone())),
        None if schema.is_less(from, target) => Ok(Inference::plain(star_project(db, source, target)?)),
        None if schema.is_less(target, from) => Ok(Inference::plain(star_deproject(db, source, target)?)),
        None => {
            let lessers = common_lesser_collections(schema, from, target);
            if lessers.is_empty() {
                return Ok(Inference {
                    result: ElementSet::full(db, target)?,
                    warning: Some(INDEPENDENT_WARNING),
                });
            }
            let mut out = ElementSet::empty(db, target)?;
            for w in &lessers {
                let down = star_deproject(db, source, w)?;
                out.union_with(&star_project(db, &down, target)?);
            }
            Ok(Inference::plain(out))
        }
    }
}

fn not_common_lesser(via: &str, source: &str, target: &str) -> Error {
    Error::ViaNotCommonLesser {
        via: via.to_string(),
        source_collection: source.to_string(),
        target: target.to_string(),
    }
}

pub fn count(set: &ElementSet) -> usize {
    set.len()
}

/// Total of the numeric values reached from each member along `path`.
/// NULL hops contribute nothing.
pub fn sum(db: &Database, set: &ElementSet, path: &DimensionPath) -> Result<Decimal> {
    if !is_numeric_path(path) {
        return Err(Error::NonNumericPath(path.to_string()));
    }
    let mut values = Vec::new();
    for e in set.elements() {
        if let Some(FieldValue::Value(v)) = db.follow(e, path)? {
            values.push(v);
        }
    }
    sum_values(values).ok_or_else(|| Error::TypeMismatch {
        field: path.to_string(),
        detail: "sum exceeds 38 significant digits".into(),
    })
}
