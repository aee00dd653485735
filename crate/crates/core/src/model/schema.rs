use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::value::PrimitiveType;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FieldType {
    /// `length` is the declared `CHAR(n)` size; kept as metadata only.
    Primitive { ty: PrimitiveType, length: Option<u32> },
    /// A dimension into a greater concept.
    Reference(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldSpec {
    pub name: String,
    pub ty: FieldType,
    pub nullable: bool,
}

impl FieldSpec {
    pub fn primitive(name: impl Into<String>, ty: PrimitiveType) -> Self {
        FieldSpec {
            name: name.into(),
            ty: FieldType::Primitive { ty, length: None },
            nullable: false,
        }
    }

    pub fn reference(name: impl Into<String>, concept: impl Into<String>) -> Self {
        FieldSpec {
            name: name.into(),
            ty: FieldType::Reference(concept.into()),
            nullable: false,
        }
    }

    pub fn nullable(mut self) -> Self {
        self.nullable = true;
        self
    }

    pub fn referenced_concept(&self) -> Option<&str> {
        match &self.ty {
            FieldType::Reference(c) => Some(c),
            FieldType::Primitive { .. } => None,
        }
    }
}

/// A type made of an identity part and an entity part.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Concept {
    pub name: String,
    pub identity: Vec<FieldSpec>,
    pub entity: Vec<FieldSpec>,
}

/// Where a field lives inside its concept.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FieldLoc {
    Identity(usize),
    Entity(usize),
}

impl Concept {
    pub fn new(name: impl Into<String>) -> Self {
        Concept {
            name: name.into(),
            identity: Vec::new(),
            entity: Vec::new(),
        }
    }

    pub fn identity(mut self, field: FieldSpec) -> Self {
        self.identity.push(field);
        self
    }

    pub fn entity(mut self, field: FieldSpec) -> Self {
        self.entity.push(field);
        self
    }

    /// Identity fields followed by entity fields.
    pub fn fields(&self) -> impl Iterator<Item = &FieldSpec> {
        self.identity.iter().chain(&self.entity)
    }

    pub fn field(&self, name: &str) -> Option<(FieldLoc, &FieldSpec)> {
        if let Some(i) = self.identity.iter().position(|f| f.name == name) {
            return Some((FieldLoc::Identity(i), &self.identity[i]));
        }
        let i = self.entity.iter().position(|f| f.name == name)?;
        Some((FieldLoc::Entity(i), &self.entity[i]))
    }

    pub fn is_value_type(&self) -> bool {
        self.entity.is_empty()
    }

    pub fn identity_types(&self) -> Vec<PrimitiveType> {
        self.identity
            .iter()
            .map(|f| match f.ty {
                FieldType::Primitive { ty, .. } => ty,
                // rejected by build_schema
                FieldType::Reference(_) => PrimitiveType::String,
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Destination {
    Concept(String),
    Primitive(PrimitiveType),
}

/// A named field seen as an arrow from its source concept to the domain of
/// its values. Reference fields point to greater concepts; primitive fields
/// end in a primitive domain.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Dimension {
    pub name: String,
    pub source: String,
    pub destination: Destination,
    pub nullable: bool,
}

impl Dimension {
    pub fn is_reference(&self) -> bool {
        matches!(self.destination, Destination::Concept(_))
    }

    pub fn destination_concept(&self) -> Option<&str> {
        match &self.destination {
            Destination::Concept(c) => Some(c),
            Destination::Primitive(_) => None,
        }
    }
}

/// A composable sequence of dimensions starting at `source`. The rank is
/// the number of segments; rank 0 is the identity path.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DimensionPath {
    source: String,
    segments: Vec<Dimension>,
}

impl DimensionPath {
    pub fn identity(concept: impl Into<String>) -> Self {
        DimensionPath {
            source: concept.into(),
            segments: Vec::new(),
        }
    }

    pub fn new(segments: Vec<Dimension>) -> Result<Self> {
        let first = segments
            .first()
            .ok_or_else(|| Error::not_composable("empty dimension path"))?;
        let mut path = DimensionPath::identity(first.source.clone());
        for seg in segments {
            path.push(seg)?;
        }
        Ok(path)
    }

    pub fn push(&mut self, dim: Dimension) -> Result<()> {
        match self.destination() {
            Destination::Concept(c) if c == dim.source => {
                self.segments.push(dim);
                Ok(())
            }
            Destination::Concept(c) => Err(Error::not_composable(format!(
                "`{}` starts at `{}` but the path is at `{c}`",
                dim.name, dim.source
            ))),
            Destination::Primitive(_) => Err(Error::not_composable(format!(
                "`{}` follows a primitive field",
                dim.name
            ))),
        }
    }

    pub fn then(mut self, dim: Dimension) -> Result<Self> {
        self.push(dim)?;
        Ok(self)
    }

    pub fn rank(&self) -> usize {
        self.segments.len()
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn segments(&self) -> &[Dimension] {
        &self.segments
    }

    pub fn destination(&self) -> Destination {
        match self.segments.last() {
            Some(d) => d.destination.clone(),
            None => Destination::Concept(self.source.clone()),
        }
    }

    pub fn destination_concept(&self) -> Option<&str> {
        match self.segments.last() {
            Some(d) => d.destination_concept(),
            None => Some(&self.source),
        }
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.segments.iter().map(|d| d.name.as_str())
    }
}

impl fmt::Display for DimensionPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.segments.is_empty() {
            return write!(f, "<identity of {}>", self.source);
        }
        for (i, name) in self.names().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            f.write_str(name)?;
        }
        Ok(())
    }
}

/// A validated set of concepts ordered by their reference dimensions.
#[derive(Clone, Debug, Default)]
pub struct Schema {
    concepts: Vec<Concept>,
    index: HashMap<String, usize>,
    /// `closure[a][b]` iff concept a < concept b.
    closure: Vec<Vec<bool>>,
}

/// Validates concept definitions and derives dimensions and the concept order.
pub fn build_schema(definitions: Vec<Concept>) -> Result<Schema> {
    let mut index = HashMap::new();
    for (i, c) in definitions.iter().enumerate() {
        if index.insert(c.name.clone(), i).is_some() {
            return Err(Error::DuplicateConcept(c.name.clone()));
        }
    }
    for c in &definitions {
        let mut seen = std::collections::HashSet::new();
        for f in c.fields() {
            if !seen.insert(f.name.as_str()) {
                return Err(Error::DuplicateField {
                    concept: c.name.clone(),
                    field: f.name.clone(),
                });
            }
        }
        if c.identity.is_empty() {
            return Err(Error::EmptyIdentity(c.name.clone()));
        }
        for f in &c.identity {
            if f.referenced_concept().is_some() {
                return Err(Error::NestedIdentity {
                    concept: c.name.clone(),
                    field: f.name.clone(),
                });
            }
            if f.nullable {
                return Err(Error::NullableIdentity {
                    concept: c.name.clone(),
                    field: f.name.clone(),
                });
            }
        }
        for f in &c.entity {
            if let Some(target) = f.referenced_concept() {
                if !index.contains_key(target) {
                    return Err(Error::UnknownConcept(target.to_string()));
                }
            }
        }
    }

    let n = definitions.len();
    let greater: Vec<Vec<usize>> = definitions
        .iter()
        .map(|c| {
            c.entity
                .iter()
                .filter_map(|f| f.referenced_concept())
                .map(|t| index[t])
                .collect()
        })
        .collect();
    if let Some(cycle) = find_cycle(&greater) {
        return Err(Error::CyclicSchema(
            cycle.into_iter().map(|i| definitions[i].name.clone()).collect(),
        ));
    }

    let mut closure = vec![vec![false; n]; n];
    for start in 0..n {
        let mut stack = greater[start].clone();
        while let Some(g) = stack.pop() {
            if !closure[start][g] {
                closure[start][g] = true;
                stack.extend(&greater[g]);
            }
        }
    }

    Ok(Schema {
        concepts: definitions,
        index,
        closure,
    })
}

fn find_cycle(greater: &[Vec<usize>]) -> Option<Vec<usize>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    fn visit(v: usize, g: &[Vec<usize>], marks: &mut [Mark], stack: &mut Vec<usize>) -> bool {
        marks[v] = Mark::Active;
        stack.push(v);
        for &w in &g[v] {
            let mark = marks[w];
            match mark {
                Mark::Active => {
                    let start = stack.iter().position(|&x| x == w).unwrap();
                    stack.drain(..start);
                    stack.push(w);
                    return true;
                }
                Mark::New if visit(w, g, marks, stack) => return true,
                _ => {}
            }
        }
        stack.pop();
        marks[v] = Mark::Done;
        false
    }
    let mut marks = vec![Mark::New; greater.len()];
    for v in 0..greater.len() {
        let mut stack = Vec::new();
        if marks[v] == Mark::New && visit(v, greater, &mut marks, &mut stack) {
            return Some(stack);
        }
    }
    None
}

impl Schema {
    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn concepts(&self) -> &[Concept] {
        &self.concepts
    }

    pub fn concept(&self, name: &str) -> Option<&Concept> {
        self.index.get(name).map(|&i| &self.concepts[i])
    }

    pub(crate) fn concept_id(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub(crate) fn require(&self, name: &str) -> Result<usize> {
        self.concept_id(name)
            .ok_or_else(|| Error::UnknownConcept(name.to_string()))
    }

    /// The dimension named `name` on concept `source`, reference or primitive.
    pub fn dimension(&self, source: &str, name: &str) -> Option<Dimension> {
        let concept = self.concept(source)?;
        let (_, f) = concept.field(name)?;
        Some(Dimension {
            name: f.name.clone(),
            source: concept.name.clone(),
            destination: match &f.ty {
                FieldType::Reference(c) => Destination::Concept(c.clone()),
                FieldType::Primitive { ty, .. } => Destination::Primitive(*ty),
            },
            nullable: f.nullable,
        })
    }

    /// All reference dimensions, in concept then field order.
    pub fn dimensions(&self) -> Vec<Dimension> {
        self.concepts
            .iter()
            .flat_map(|c| {
                c.entity
                    .iter()
                    .filter(|f| f.referenced_concept().is_some())
                    .map(|f| self.dimension(&c.name, &f.name).unwrap())
            })
            .collect()
    }

    /// Resolves a dotted path of field names starting at `source`.
    pub fn path(&self, source: &str, names: &[&str]) -> Result<DimensionPath> {
        self.require(source)?;
        let mut path = DimensionPath::identity(source);
        for name in names {
            let at = path
                .destination_concept()
                .ok_or_else(|| Error::not_composable(format!("`{name}` follows a primitive field")))?
                .to_string();
            let dim = self.dimension(&at, name).ok_or_else(|| Error::UnknownDimension {
                name: name.to_string(),
                concept: at.clone(),
                at: None,
            })?;
            path.push(dim)?;
        }
        Ok(path)
    }

    /// Immediate greater concepts: destinations of the concept's reference dimensions.
    pub fn greater_concepts(&self, concept: &str) -> Result<Vec<(Dimension, String)>> {
        let c = &self.concepts[self.require(concept)?];
        Ok(c.entity
            .iter()
            .filter_map(|f| {
                let target = f.referenced_concept()?;
                Some((self.dimension(&c.name, &f.name)?, target.to_string()))
            })
            .collect())
    }

    /// Immediate lesser concepts: owners of a dimension into this concept.
    pub fn lesser_concepts(&self, concept: &str) -> Result<Vec<(Dimension, String)>> {
        self.require(concept)?;
        Ok(self
            .dimensions()
            .into_iter()
            .filter(|d| d.destination_concept() == Some(concept))
            .map(|d| {
                let src = d.source.clone();
                (d, src)
            })
            .collect())
    }

    /// Strict order on concepts: `a < b` iff b is reachable from a through
    /// reference dimensions.
    pub fn is_less(&self, a: &str, b: &str) -> bool {
        match (self.concept_id(a), self.concept_id(b)) {
            (Some(a), Some(b)) => self.closure[a][b],
            _ => false,
        }
    }

    pub fn is_less_or_equal(&self, a: &str, b: &str) -> bool {
        (a == b && self.concept_id(a).is_some()) || self.is_less(a, b)
    }

    /// Concepts ordered so that every concept comes after all its greater
    /// concepts. Ties keep declaration order.
    pub fn topological_order(&self) -> Vec<&str> {
        let n = self.concepts.len();
        let mut placed = vec![false; n];
        let mut order = Vec::with_capacity(n);
        while order.len() < n {
            for i in 0..n {
                if !placed[i] && (0..n).all(|j| !self.closure[i][j] || placed[j]) {
                    placed[i] = true;
                    order.push(self.concepts[i].name.as_str());
                }
            }
        }
        order
    }

    /// The concept poset as an indented Hasse listing: top concepts first,
    /// each immediate lesser concept indented beneath with the dimension
    /// that links them.
    pub fn hasse(&self) -> String {
        let mut out = String::new();
        let mut tops: Vec<&Concept> = self
            .concepts
            .iter()
            .filter(|c| c.entity.iter().all(|f| f.referenced_concept().is_none()))
            .collect();
        tops.sort_by(|a, b| a.name.cmp(&b.name));
        for top in tops {
            out.push_str(&top.name);
            out.push('\n');
            self.hasse_children(&top.name, 1, &mut out);
        }
        out
    }

    fn hasse_children(&self, concept: &str, depth: usize, out: &mut String) {
        let mut lesser = self.lesser_concepts(concept).unwrap_or_default();
        lesser.sort_by(|a, b| (&a.1, &a.0.name).cmp(&(&b.1, &b.0.name)));
        for (dim, name) in lesser {
            out.push_str(&"  ".repeat(depth));
            out.push_str(&format!("{name} ({})\n", dim.name));
            self.hasse_children(&name, depth + 1, out);
        }
    }
}
