use std::fmt;

use crate::model::{DimensionPath, Schema};

/// All simple reference paths from `lower` up to `upper`, ordered
/// lexicographically by dimension names. Empty unless `upper` is strictly
/// greater than `lower`.
pub fn enumerate_up_paths(schema: &Schema, lower: &str, upper: &str) -> Vec<DimensionPath> {
    let mut out = Vec::new();
    if schema.is_less(lower, upper) {
        let mut visited = vec![lower.to_string()];
        walk(
            schema,
            DimensionPath::identity(lower),
            upper,
            &mut visited,
            &mut out,
        );
    }
    out.sort_by(|a, b| a.names().cmp(b.names()));
    out
}

fn walk(
    schema: &Schema,
    path: DimensionPath,
    upper: &str,
    visited: &mut Vec<String>,
    out: &mut Vec<DimensionPath>,
) {
    let at = path.destination_concept().expect("reference path").to_string();
    if at == upper {
        out.push(path);
        return;
    }
    for (dim, next) in schema.greater_concepts(&at).unwrap_or_default() {
        if visited.contains(&next) || !schema.is_less_or_equal(&next, upper) {
            continue;
        }
        visited.push(next);
        walk(
            schema,
            path.clone().then(dim).expect("composable"),
            upper,
            visited,
            out,
        );
        visited.pop();
    }
}

/// Collections strictly less than both `a` and `b` that are maximal among
/// such collections, sorted by name.
pub fn common_lesser_collections(schema: &Schema, a: &str, b: &str) -> Vec<String> {
    let common: Vec<&str> = schema
        .concepts()
        .iter()
        .map(|c| c.name.as_str())
        .filter(|c| schema.is_less(c, a) && schema.is_less(c, b))
        .collect();
    let mut maximal: Vec<String> = common
        .iter()
        .filter(|c| !common.iter().any(|d| schema.is_less(c, d)))
        .map(|c| c.to_string())
        .collect();
    maximal.sort();
    maximal
}

/// One leg of a propagation path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Segment {
    /// De-projection into the path's source collection.
    Down(DimensionPath),
    Up(DimensionPath),
}

/// A reconstructed constraint propagation path: down into a common lesser
/// collection, then up to the target.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropagationPath {
    pub source: String,
    pub target: String,
    pub segments: Vec<Segment>,
}

impl fmt::Display for PropagationPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.source)?;
        for seg in &self.segments {
            match seg {
                Segment::Down(p) => {
                    for d in p.segments().iter().rev() {
                        write!(f, " <- {} <- ({})", d.name, d.source)?;
                    }
                }
                Segment::Up(p) => {
                    for d in p.segments() {
                        match d.destination_concept() {
                            Some(c) => write!(f, " -> {} -> ({c})", d.name)?,
                            None => write!(f, " -> {}", d.name)?,
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Every propagation path from `source` down to `via` and up to `target`.
pub fn propagation_paths(schema: &Schema, source: &str, via: &str, target: &str) -> Vec<PropagationPath> {
    let downs = paths_or_identity(schema, via, source);
    let ups = paths_or_identity(schema, via, target);
    let mut out = Vec::new();
    for down in &downs {
        for up in &ups {
            let mut segments = Vec::new();
            if down.rank() > 0 {
                segments.push(Segment::Down(down.clone()));
            }
            if up.rank() > 0 {
                segments.push(Segment::Up(up.clone()));
            }
            out.push(PropagationPath {
                source: source.to_string(),
                target: target.to_string(),
                segments,
            });
        }
    }
    out
}

/// Up paths, or the rank-0 identity path when both ends coincide.
pub(crate) fn paths_or_identity(schema: &Schema, lower: &str, upper: &str) -> Vec<DimensionPath> {
    if lower == upper {
        vec![DimensionPath::identity(lower)]
    } else {
        enumerate_up_paths(schema, lower, upper)
    }
}
