use std::collections::BTreeSet;
use std::fmt;

use fixedbitset::FixedBitSet;

use crate::error::Result;
use crate::model::{Database, ElementId};
use crate::value::{IdentityTuple, PrimitiveType, Value};

/// The implicit domain of a primitive field.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PrimitiveDomain {
    pub concept: String,
    pub field: String,
    pub ty: PrimitiveType,
}

impl fmt::Display for PrimitiveDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.concept, self.field)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Domain {
    Collection(String),
    Primitive(PrimitiveDomain),
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Collection(c) => write!(f, "({c})"),
            Domain::Primitive(p) => write!(f, "{p}"),
        }
    }
}

#[derive(Clone, Debug)]
enum Members {
    Elements { collection: u32, bits: FixedBitSet },
    Values(BTreeSet<Value>),
}

/// A homogeneous set of elements of one collection, or of values of one
/// primitive domain.
#[derive(Clone, Debug)]
pub struct ElementSet {
    domain: Domain,
    members: Members,
}

impl ElementSet {
    pub fn empty(db: &Database, collection: &str) -> Result<Self> {
        let id = db.collection_id(collection)?;
        Ok(Self::from_bits(db, id, FixedBitSet::new()))
    }

    /// Every element of a collection.
    pub fn full(db: &Database, collection: &str) -> Result<Self> {
        let id = db.collection_id(collection)?;
        let mut bits = FixedBitSet::with_capacity(db.collection_at(id).len());
        bits.insert_range(..);
        Ok(Self::from_bits(db, id, bits))
    }

    /// Elements of `collection` given by identity; unknown identities are skipped.
    pub fn from_identities<'a>(
        db: &Database,
        collection: &str,
        identities: impl IntoIterator<Item = &'a IdentityTuple>,
    ) -> Result<Self> {
        let id = db.collection_id(collection)?;
        let coll = db.collection_at(id);
        Ok(Self::from_rows(
            db,
            id,
            identities.into_iter().filter_map(|t| coll.find(t)),
        ))
    }

    /// Convenience for single-field identities.
    pub fn from_keys<V: Into<Value>>(
        db: &Database,
        collection: &str,
        keys: impl IntoIterator<Item = V>,
    ) -> Result<Self> {
        let ids: Vec<IdentityTuple> = keys.into_iter().map(IdentityTuple::single).collect();
        Self::from_identities(db, collection, &ids)
    }

    /// Elements that satisfy `keep`.
    pub fn filter(db: &Database, collection: &str, keep: impl Fn(ElementId) -> bool) -> Result<Self> {
        let id = db.collection_id(collection)?;
        let n = db.collection_at(id).len() as u32;
        Ok(Self::from_rows(
            db,
            id,
            (0..n).filter(|&r| keep(ElementId::new(id, r))),
        ))
    }

    pub fn from_elements(
        db: &Database,
        collection: &str,
        elements: impl IntoIterator<Item = ElementId>,
    ) -> Result<Self> {
        let id = db.collection_id(collection)?;
        Ok(Self::from_rows(
            db,
            id,
            elements
                .into_iter()
                .filter(|e| e.collection as usize == id)
                .map(|e| e.index),
        ))
    }

    pub fn values(domain: PrimitiveDomain, values: impl IntoIterator<Item = Value>) -> Self {
        ElementSet {
            domain: Domain::Primitive(domain),
            members: Members::Values(values.into_iter().collect()),
        }
    }

    pub(crate) fn from_rows(db: &Database, collection: usize, rows: impl IntoIterator<Item = u32>) -> Self {
        let mut bits = FixedBitSet::with_capacity(db.collection_at(collection).len());
        for r in rows {
            bits.insert(r as usize);
        }
        Self::from_bits(db, collection, bits)
    }

    pub(crate) fn from_bits(db: &Database, collection: usize, bits: FixedBitSet) -> Self {
        ElementSet {
            domain: Domain::Collection(db.collection_at(collection).name().to_string()),
            members: Members::Elements {
                collection: collection as u32,
                bits,
            },
        }
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// The collection name, `None` for primitive sets.
    pub fn collection(&self) -> Option<&str> {
        match &self.domain {
            Domain::Collection(c) => Some(c),
            Domain::Primitive(_) => None,
        }
    }

    pub fn primitive_domain(&self) -> Option<&PrimitiveDomain> {
        match &self.domain {
            Domain::Primitive(p) => Some(p),
            Domain::Collection(_) => None,
        }
    }

    pub fn len(&self) -> usize {
        match &self.members {
            Members::Elements { bits, .. } => bits.count_ones(..),
            Members::Values(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        match &self.members {
            Members::Elements { bits, .. } => bits.is_clear(),
            Members::Values(v) => v.is_empty(),
        }
    }

    pub fn contains(&self, element: ElementId) -> bool {
        match &self.members {
            Members::Elements { collection, bits } => {
                *collection == element.collection && bits.contains(element.index as usize)
            }
            Members::Values(_) => false,
        }
    }

    pub fn contains_value(&self, value: &Value) -> bool {
        match &self.members {
            Members::Values(v) => v.contains(value),
            Members::Elements { .. } => false,
        }
    }

    /// Member elements in row order; empty for primitive sets.
    pub fn elements(&self) -> impl Iterator<Item = ElementId> + '_ {
        let (collection, bits) = match &self.members {
            Members::Elements { collection, bits } => (*collection, Some(bits)),
            Members::Values(_) => (0, None),
        };
        bits.into_iter().flat_map(|b| b.ones()).map(move |r| ElementId {
            collection,
            index: r as u32,
        })
    }

    pub(crate) fn bits(&self) -> Option<&FixedBitSet> {
        match &self.members {
            Members::Elements { bits, .. } => Some(bits),
            Members::Values(_) => None,
        }
    }

    /// Member values in order; empty for element sets.
    pub fn value_iter(&self) -> impl Iterator<Item = &Value> {
        match &self.members {
            Members::Values(v) => Some(v.iter()),
            Members::Elements { .. } => None,
        }
        .into_iter()
        .flatten()
    }

    /// Identities of member elements, sorted.
    pub fn identities(&self, db: &Database) -> Vec<IdentityTuple> {
        let mut ids: Vec<IdentityTuple> = self.elements().map(|e| db.identity(e).clone()).collect();
        ids.sort();
        ids
    }

    /// Sorted display strings of the members: identities or values.
    pub fn keys(&self, db: &Database) -> Vec<String> {
        match &self.members {
            Members::Elements { .. } => self.identities(db).iter().map(ToString::to_string).collect(),
            Members::Values(v) => v.iter().map(ToString::to_string).collect(),
        }
    }

    /// In-place union. Both sets must share a domain.
    pub fn union_with(&mut self, other: &ElementSet) {
        debug_assert_eq!(self.domain, other.domain);
        match (&mut self.members, &other.members) {
            (Members::Elements { bits: a, .. }, Members::Elements { bits: b, .. }) => {
                if a.len() < b.len() {
                    a.grow(b.len());
                }
                a.union_with(b);
            }
            (Members::Values(a), Members::Values(b)) => a.extend(b.iter().cloned()),
            _ => unreachable!("domains match"),
        }
    }

    /// In-place intersection. Both sets must share a domain.
    pub fn intersect_with(&mut self, other: &ElementSet) {
        debug_assert_eq!(self.domain, other.domain);
        match (&mut self.members, &other.members) {
            (Members::Elements { bits: a, .. }, Members::Elements { bits: b, .. }) => a.intersect_with(b),
            (Members::Values(a), Members::Values(b)) => a.retain(|v| b.contains(v)),
            _ => unreachable!("domains match"),
        }
    }

    pub fn is_subset(&self, other: &ElementSet) -> bool {
        if self.domain != other.domain {
            return self.is_empty();
        }
        match (&self.members, &other.members) {
            (Members::Elements { bits: a, .. }, Members::Elements { bits: b, .. }) => {
                a.ones().all(|i| b.contains(i))
            }
            (Members::Values(a), Members::Values(b)) => a.is_subset(b),
            _ => false,
        }
    }
}

impl PartialEq for ElementSet {
    fn eq(&self, other: &Self) -> bool {
        self.domain == other.domain
            && match (&self.members, &other.members) {
                (Members::Elements { bits: a, .. }, Members::Elements { bits: b, .. }) => {
                    a.ones().eq(b.ones())
                }
                (Members::Values(a), Members::Values(b)) => a == b,
                _ => false,
            }
    }
}

impl Eq for ElementSet {}
