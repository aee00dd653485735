use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::schema::{Concept, FieldLoc, FieldType, Schema};
use crate::model::DimensionPath;
use crate::model::{Destination, Dimension};
use crate::value::{Datum, IdentityTuple, PrimitiveType, Value};

const NONE: u32 = u32::MAX;

/// Handle of a stored element: collection slot plus row index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ElementId {
    pub collection: u32,
    pub index: u32,
}

impl ElementId {
    pub(crate) fn new(collection: usize, index: u32) -> Self {
        ElementId {
            collection: collection as u32,
            index,
        }
    }
}

/// One collection per concept. Entity fields are stored column-wise;
/// reference columns keep a reverse index from greater to lesser rows.
#[derive(Clone, Debug)]
pub struct Collection {
    name: String,
    identities: Vec<IdentityTuple>,
    lookup: HashMap<IdentityTuple, u32>,
    columns: Vec<Column>,
}

#[derive(Clone, Debug)]
pub(crate) enum Column {
    Values(Vec<Option<Value>>),
    Refs(RefColumn),
}

#[derive(Clone, Debug)]
pub(crate) struct RefColumn {
    pub(crate) target: usize,
    forward: Vec<u32>,
    reverse: Vec<Vec<u32>>,
}

impl RefColumn {
    pub(crate) fn get(&self, row: u32) -> Option<u32> {
        match self.forward[row as usize] {
            NONE => None,
            g => Some(g),
        }
    }

    pub(crate) fn lessers(&self, greater: u32) -> &[u32] {
        self.reverse
            .get(greater as usize)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }
}

impl Collection {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.identities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.identities.is_empty()
    }

    pub fn identity(&self, row: u32) -> &IdentityTuple {
        &self.identities[row as usize]
    }

    pub fn find(&self, identity: &IdentityTuple) -> Option<u32> {
        self.lookup.get(identity).copied()
    }
}

/// A value read from a field of a stored element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FieldValue<'a> {
    Null,
    Value(&'a Value),
    Element(ElementId),
}

/// A nested poset of elements: every element belongs to the collection of
/// its concept and references greater elements through its dimensions.
#[derive(Clone, Debug)]
pub struct Database {
    schema: Arc<Schema>,
    collections: Vec<Collection>,
    version: u64,
}

impl Database {
    pub fn new(schema: Schema) -> Self {
        let collections = schema
            .concepts()
            .iter()
            .map(|c| Collection {
                name: c.name.clone(),
                identities: Vec::new(),
                lookup: HashMap::new(),
                columns: c
                    .entity
                    .iter()
                    .map(|f| match &f.ty {
                        FieldType::Reference(t) => Column::Refs(RefColumn {
                            target: schema.concept_id(t).expect("validated schema"),
                            forward: Vec::new(),
                            reverse: Vec::new(),
                        }),
                        FieldType::Primitive { .. } => Column::Values(Vec::new()),
                    })
                    .collect(),
            })
            .collect();
        Database {
            schema: Arc::new(schema),
            collections,
            version: 0,
        }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    /// Incremented once per committed mutation batch.
    pub fn version(&self) -> u64 {
        self.version
    }

    pub(crate) fn bump_version(&mut self) {
        self.version += 1;
    }

    pub fn collections(&self) -> &[Collection] {
        &self.collections
    }

    pub fn collection(&self, name: &str) -> Result<&Collection> {
        Ok(&self.collections[self.collection_id(name)?])
    }

    pub(crate) fn collection_id(&self, name: &str) -> Result<usize> {
        self.schema
            .concept_id(name)
            .ok_or_else(|| Error::unknown_collection(name))
    }

    pub(crate) fn collection_at(&self, id: usize) -> &Collection {
        &self.collections[id]
    }

    pub(crate) fn concept_at(&self, id: usize) -> &Concept {
        &self.schema.concepts()[id]
    }

    pub fn elements(&self, collection: &str) -> Result<impl Iterator<Item = ElementId>> {
        let id = self.collection_id(collection)?;
        let n = self.collections[id].len() as u32;
        Ok((0..n).map(move |i| ElementId::new(id, i)))
    }

    pub fn find(&self, collection: &str, identity: &IdentityTuple) -> Result<Option<ElementId>> {
        let id = self.collection_id(collection)?;
        Ok(self.collections[id]
            .find(identity)
            .map(|row| ElementId::new(id, row)))
    }

    pub fn identity(&self, element: ElementId) -> &IdentityTuple {
        self.collections[element.collection as usize].identity(element.index)
    }

    pub fn collection_name(&self, element: ElementId) -> &str {
        &self.collections[element.collection as usize].name
    }

    /// Inserts one element, enforcing identity uniqueness, NULL rules,
    /// field types and the type constraint on references. Nothing is
    /// written unless every check passes.
    pub fn insert(
        &mut self,
        collection: &str,
        identity: IdentityTuple,
        entity: Vec<Datum>,
    ) -> Result<ElementId> {
        let cid = self.collection_id(collection)?;
        let concept = &self.schema.concepts()[cid];
        if identity.0.len() != concept.identity.len() {
            return Err(Error::TypeMismatch {
                field: format!("{collection} identity"),
                detail: format!(
                    "expected {} components, found {}",
                    concept.identity.len(),
                    identity.0.len()
                ),
            });
        }
        let identity = IdentityTuple(
            identity
                .0
                .into_iter()
                .zip(concept.identity_types())
                .zip(&concept.identity)
                .map(|((v, ty), f)| {
                    ty.coerce(v).map_err(|detail| Error::TypeMismatch {
                        field: format!("{collection}.{}", f.name),
                        detail,
                    })
                })
                .collect::<Result<_>>()?,
        );
        if entity.len() != concept.entity.len() {
            return Err(Error::TypeMismatch {
                field: format!("{collection} entity"),
                detail: format!("expected {} values, found {}", concept.entity.len(), entity.len()),
            });
        }

        enum Cell {
            Value(Option<Value>),
            Ref(u32),
        }
        let mut cells = Vec::with_capacity(entity.len());
        for (datum, field) in entity.into_iter().zip(&concept.entity) {
            let field_name = || format!("{collection}.{}", field.name);
            let cell = match (datum, &field.ty) {
                (Datum::Null, FieldType::Reference(_)) if field.nullable => Cell::Ref(NONE),
                (Datum::Null, FieldType::Primitive { .. }) if field.nullable => Cell::Value(None),
                (Datum::Null, _) => {
                    return Err(Error::NullViolation {
                        collection: collection.to_string(),
                        field: field.name.clone(),
                    })
                }
                (Datum::Value(v), FieldType::Primitive { ty, .. }) => {
                    Cell::Value(Some(ty.coerce(v).map_err(|detail| Error::TypeMismatch {
                        field: field_name(),
                        detail,
                    })?))
                }
                (Datum::Ref(_), FieldType::Primitive { ty, .. }) => {
                    return Err(Error::TypeMismatch {
                        field: field_name(),
                        detail: format!("expected {ty}, found a reference"),
                    })
                }
                (datum, FieldType::Reference(target)) => {
                    let tid = self.schema.concept_id(target).expect("validated schema");
                    let target_concept = &self.schema.concepts()[tid];
                    let key = match datum {
                        Datum::Ref(t) => t,
                        Datum::Value(v) => IdentityTuple(vec![v]),
                        Datum::Null => unreachable!(),
                    };
                    let key = coerce_identity(key, &target_concept.identity_types()).map_err(|detail| {
                        Error::TypeMismatch {
                            field: field_name(),
                            detail,
                        }
                    })?;
                    match self.collections[tid].find(&key) {
                        Some(row) => Cell::Ref(row),
                        None => {
                            return Err(Error::DanglingReference {
                                collection: collection.to_string(),
                                field: field.name.clone(),
                                target: target.clone(),
                                identity: key.to_string(),
                            })
                        }
                    }
                }
            };
            cells.push(cell);
        }
        if self.collections[cid].lookup.contains_key(&identity) {
            return Err(Error::DuplicateIdentity {
                collection: collection.to_string(),
                identity: identity.to_string(),
            });
        }

        let coll = &mut self.collections[cid];
        let row = coll.identities.len() as u32;
        coll.lookup.insert(identity.clone(), row);
        coll.identities.push(identity);
        for (column, cell) in coll.columns.iter_mut().zip(cells) {
            match (column, cell) {
                (Column::Values(vals), Cell::Value(v)) => vals.push(v),
                (Column::Refs(refs), Cell::Ref(g)) => {
                    refs.forward.push(g);
                    if g != NONE {
                        let g = g as usize;
                        if refs.reverse.len() <= g {
                            refs.reverse.resize_with(g + 1, Vec::new);
                        }
                        refs.reverse[g].push(row);
                    }
                }
                _ => unreachable!("cells are built per column kind"),
            }
        }
        Ok(ElementId::new(cid, row))
    }

    /// Inserts a row given as text cells in field order (identity fields,
    /// then entity fields). Empty cells and `NULL` are NULL; reference
    /// cells hold the encoded identity of the greater element.
    pub fn insert_text(&mut self, collection: &str, cells: &[&str]) -> Result<ElementId> {
        let cid = self.collection_id(collection)?;
        let concept = &self.schema.concepts()[cid];
        let expected = concept.identity.len() + concept.entity.len();
        if cells.len() != expected {
            return Err(Error::TypeMismatch {
                field: collection.to_string(),
                detail: format!("expected {expected} cells, found {}", cells.len()),
            });
        }
        let (id_cells, entity_cells) = cells.split_at(concept.identity.len());
        let mut identity = Vec::with_capacity(id_cells.len());
        for (cell, field) in id_cells.iter().zip(&concept.identity) {
            if is_null_cell(cell) {
                return Err(Error::NullViolation {
                    collection: collection.to_string(),
                    field: field.name.clone(),
                });
            }
            let FieldType::Primitive { ty, .. } = field.ty else {
                unreachable!("identities are primitive")
            };
            identity.push(ty.parse(cell).map_err(|detail| Error::TypeMismatch {
                field: format!("{collection}.{}", field.name),
                detail,
            })?);
        }
        let mut entity = Vec::with_capacity(entity_cells.len());
        for (cell, field) in entity_cells.iter().zip(&concept.entity) {
            let datum = if is_null_cell(cell) {
                Datum::Null
            } else {
                match &field.ty {
                    FieldType::Primitive { ty, .. } => {
                        Datum::Value(ty.parse(cell).map_err(|detail| Error::TypeMismatch {
                            field: format!("{collection}.{}", field.name),
                            detail,
                        })?)
                    }
                    FieldType::Reference(target) => {
                        let types = self.schema.concept(target).unwrap().identity_types();
                        Datum::Ref(IdentityTuple::decode(cell, &types).map_err(|detail| {
                            Error::TypeMismatch {
                                field: format!("{collection}.{}", field.name),
                                detail,
                            }
                        })?)
                    }
                }
            };
            entity.push(datum);
        }
        self.insert(collection, IdentityTuple(identity), entity)
    }

    /// Reads one field of an element by location.
    pub(crate) fn field_at(&self, element: ElementId, loc: FieldLoc) -> FieldValue<'_> {
        let coll = &self.collections[element.collection as usize];
        match loc {
            FieldLoc::Identity(i) => FieldValue::Value(&coll.identities[element.index as usize].0[i]),
            FieldLoc::Entity(i) => match &coll.columns[i] {
                Column::Values(vals) => match &vals[element.index as usize] {
                    Some(v) => FieldValue::Value(v),
                    None => FieldValue::Null,
                },
                Column::Refs(refs) => match refs.get(element.index) {
                    Some(g) => FieldValue::Element(ElementId::new(refs.target, g)),
                    None => FieldValue::Null,
                },
            },
        }
    }

    /// Reads a field by name.
    pub fn field(&self, element: ElementId, name: &str) -> Result<FieldValue<'_>> {
        let concept = self.concept_at(element.collection as usize);
        let (loc, _) = concept.field(name).ok_or_else(|| Error::UnknownDimension {
            name: name.to_string(),
            concept: concept.name.clone(),
            at: None,
        })?;
        Ok(self.field_at(element, loc))
    }

    fn check_starts_at(&self, element: ElementId, path: &DimensionPath) -> Result<()> {
        let name = self.collection_name(element);
        if path.source() != name {
            return Err(Error::not_composable(format!(
                "path `{path}` starts at `{}`, element is in `{name}`",
                path.source()
            )));
        }
        Ok(())
    }

    /// Follows `path` from `element`. NULL if any hop is NULL.
    pub fn follow(&self, element: ElementId, path: &DimensionPath) -> Result<Option<FieldValue<'_>>> {
        self.check_starts_at(element, path)?;
        let mut current = FieldValue::Element(element);
        for dim in path.segments() {
            let FieldValue::Element(e) = current else {
                unreachable!("primitive segments are last")
            };
            let (loc, _) = self
                .concept_at(e.collection as usize)
                .field(&dim.name)
                .expect("path validated against schema");
            current = self.field_at(e, loc);
            if current == FieldValue::Null {
                return Ok(None);
            }
        }
        Ok(Some(current))
    }

    /// The greater element reached along a reference path, or `None` for NULL.
    pub fn greater_of(&self, element: ElementId, path: &DimensionPath) -> Result<Option<ElementId>> {
        if let Destination::Primitive(_) = path.destination() {
            return Err(Error::not_composable(format!(
                "`{path}` ends in a primitive field, not a collection"
            )));
        }
        Ok(self.follow(element, path)?.map(|v| match v {
            FieldValue::Element(e) => e,
            _ => unreachable!("reference path"),
        }))
    }

    /// Elements of `dimension.source` whose `dimension` references `element`.
    pub fn lessers_of(&self, element: ElementId, dimension: &Dimension) -> Result<Vec<ElementId>> {
        Ok(self
            .lesser_rows(element, dimension)?
            .iter()
            .map(|&r| ElementId::new(self.collection_id(&dimension.source).unwrap(), r))
            .collect())
    }

    pub(crate) fn lesser_rows(&self, element: ElementId, dimension: &Dimension) -> Result<&[u32]> {
        let target = self.collection_name(element);
        if dimension.destination_concept() != Some(target) {
            return Err(Error::not_composable(format!(
                "`{}.{}` does not point into `{target}`",
                dimension.source, dimension.name
            )));
        }
        let refs = self.ref_column(&dimension.source, &dimension.name)?;
        Ok(refs.lessers(element.index))
    }

    pub(crate) fn ref_column(&self, collection: &str, field: &str) -> Result<&RefColumn> {
        let cid = self.collection_id(collection)?;
        match self.concept_at(cid).field(field) {
            Some((FieldLoc::Entity(i), _)) => match &self.collections[cid].columns[i] {
                Column::Refs(r) => Ok(r),
                Column::Values(_) => Err(Error::not_composable(format!(
                    "`{collection}.{field}` is not a reference"
                ))),
            },
            _ => Err(Error::not_composable(format!(
                "`{collection}.{field}` is not a reference"
            ))),
        }
    }

    /// Immediate greater elements of `element`, one per non-NULL reference.
    pub fn immediate_greater(&self, element: ElementId) -> impl Iterator<Item = ElementId> + '_ {
        self.collections[element.collection as usize]
            .columns
            .iter()
            .filter_map(move |c| match c {
                Column::Refs(r) => r.get(element.index).map(|g| ElementId::new(r.target, g)),
                Column::Values(_) => None,
            })
    }

    /// Strict order on elements: `a < b` iff b is reachable from a through
    /// one or more references.
    pub fn less_than(&self, a: ElementId, b: ElementId) -> bool {
        let mut stack: Vec<ElementId> = self.immediate_greater(a).collect();
        let mut seen = std::collections::HashSet::new();
        while let Some(e) = stack.pop() {
            if e == b {
                return true;
            }
            if seen.insert(e) {
                stack.extend(self.immediate_greater(e));
            }
        }
        false
    }

    /// Reflexive closure of [`less_than`](Self::less_than).
    pub fn less_or_equal(&self, a: ElementId, b: ElementId) -> bool {
        a == b || self.less_than(a, b)
    }

    /// Re-checks every stored invariant by full scan: identity uniqueness,
    /// the type constraint, and reverse-index coherence.
    pub fn verify(&self) -> Result<()> {
        for (cid, coll) in self.collections.iter().enumerate() {
            if coll.lookup.len() != coll.identities.len() {
                return Err(Error::DuplicateIdentity {
                    collection: coll.name.clone(),
                    identity: "<scan>".into(),
                });
            }
            for (row, identity) in coll.identities.iter().enumerate() {
                if coll.lookup.get(identity) != Some(&(row as u32)) {
                    return Err(Error::DuplicateIdentity {
                        collection: coll.name.clone(),
                        identity: identity.to_string(),
                    });
                }
            }
            let concept = self.concept_at(cid);
            for (column, field) in coll.columns.iter().zip(&concept.entity) {
                let Column::Refs(refs) = column else { continue };
                let target_len = self.collections[refs.target].len() as u32;
                for row in 0..coll.len() as u32 {
                    match refs.get(row) {
                        None if !field.nullable => {
                            return Err(Error::NullViolation {
                                collection: coll.name.clone(),
                                field: field.name.clone(),
                            })
                        }
                        None => {}
                        Some(g) if g >= target_len || !refs.lessers(g).contains(&row) => {
                            return Err(Error::DanglingReference {
                                collection: coll.name.clone(),
                                field: field.name.clone(),
                                target: self.collections[refs.target].name.clone(),
                                identity: coll.identities[row as usize].to_string(),
                            })
                        }
                        Some(_) => {}
                    }
                }
                for (g, lessers) in refs.reverse.iter().enumerate() {
                    if lessers.iter().any(|&l| refs.get(l) != Some(g as u32)) {
                        return Err(Error::not_composable(format!(
                            "reverse index of `{}.{}` is stale",
                            coll.name, field.name
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

fn is_null_cell(cell: &str) -> bool {
    cell.is_empty() || cell == "NULL"
}

fn coerce_identity(key: IdentityTuple, types: &[PrimitiveType]) -> Result<IdentityTuple, String> {
    if key.0.len() != types.len() {
        return Err(format!(
            "identity {key} has {} components, expected {}",
            key.0.len(),
            types.len()
        ));
    }
    key.0
        .into_iter()
        .zip(types)
        .map(|(v, ty)| ty.coerce(v))
        .collect::<Result<_, _>>()
        .map(IdentityTuple)
}
