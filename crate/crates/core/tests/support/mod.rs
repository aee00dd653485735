//! Seeded random databases and a brute-force oracle built on the
//! materialized order relation.
#![allow(dead_code)]

pub mod ast_gen;
pub mod props;

use std::collections::{BTreeMap, BTreeSet};

use comdb::algebra::{Domain, ElementSet};
use comdb::model::{build_schema, Concept, Database, DimensionPath, ElementId, FieldSpec, FieldValue};
use comdb::value::{PrimitiveType, Value};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub type Rng8 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng8 {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Copy, Debug)]
pub struct GenConfig {
    pub max_collections: usize,
    pub max_elements: usize,
    pub nulls: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_collections: 6,
            max_elements: 200,
            nulls: true,
        }
    }
}

/// `C0..Cn`; a concept only references concepts with smaller indexes, so
/// `C0` is the greatest. Every concept has an identity `id` and an integer `v`.
pub struct RandomDb {
    pub db: Database,
    pub names: Vec<String>,
    /// Per concept: reference dimensions and their target index.
    pub refs: Vec<Vec<(String, usize)>>,
}

pub fn random_db(seed: u64, cfg: GenConfig) -> RandomDb {
    let mut rng = rng(seed);
    let n = rng.gen_range(2..=cfg.max_collections);
    let names: Vec<String> = (0..n).map(|i| format!("C{i}")).collect();
    let mut refs = Vec::new();
    let mut concepts = Vec::new();
    let mut nullable = Vec::new();
    for i in 0..n {
        let mut c = Concept::new(&names[i]).identity(FieldSpec::primitive("id", PrimitiveType::String));
        let mut mine = Vec::new();
        let mut null_mask = Vec::new();
        if i > 0 {
            for j in 0..rng.gen_range(0..=3) {
                let target = rng.gen_range(0..i);
                let name = format!("r{j}");
                let mut f = FieldSpec::reference(&name, &names[target]);
                let null = cfg.nulls && rng.gen_bool(0.3);
                if null {
                    f = f.nullable();
                }
                c = c.entity(f);
                mine.push((name, target));
                null_mask.push(null);
            }
        }
        c = c.entity(FieldSpec::primitive("v", PrimitiveType::Integer));
        concepts.push(c);
        refs.push(mine);
        nullable.push(null_mask);
    }
    let mut db = Database::new(build_schema(concepts).expect("generated schema is valid"));
    let per = (cfg.max_elements / n).max(1);
    let mut sizes = vec![0usize; n];
    for i in 0..n {
        let blocked = refs[i]
            .iter()
            .zip(&nullable[i])
            .any(|((_, t), null)| sizes[*t] == 0 && !null);
        let size = if blocked || rng.gen_bool(0.05) {
            0
        } else {
            rng.gen_range(1..=per)
        };
        for k in 0..size {
            let mut cells = vec![format!("{}_{k}", names[i])];
            for ((_, t), null) in refs[i].iter().zip(&nullable[i]) {
                if sizes[*t] == 0 || (*null && rng.gen_bool(0.2)) {
                    cells.push(String::new());
                } else {
                    cells.push(format!("{}_{}", names[*t], rng.gen_range(0..sizes[*t])));
                }
            }
            cells.push(rng.gen_range(0..10).to_string());
            let cells: Vec<&str> = cells.iter().map(String::as_str).collect();
            db.insert_text(&names[i], &cells).expect("generated row is valid");
        }
        sizes[i] = size;
    }
    RandomDb { db, names, refs }
}

impl RandomDb {
    pub fn subset(&self, rng: &mut Rng8, collection: &str, density: f64) -> ElementSet {
        let keep: BTreeSet<ElementId> = self
            .db
            .elements(collection)
            .unwrap()
            .filter(|_| rng.gen_bool(density))
            .collect();
        ElementSet::filter(&self.db, collection, |e| keep.contains(&e)).unwrap()
    }

    pub fn random_collection(&self, rng: &mut Rng8) -> usize {
        rng.gen_range(0..self.names.len())
    }

    /// A random walk up the references from `from`, of rank `1..=max_rank`,
    /// sometimes ending in the primitive `v`.
    pub fn random_path(
        &self,
        rng: &mut Rng8,
        from: usize,
        max_rank: usize,
        primitive: bool,
    ) -> DimensionPath {
        let mut names: Vec<String> = Vec::new();
        let mut at = from;
        while names.len() < max_rank {
            match self.refs[at].choose(rng) {
                Some((dim, target)) if names.is_empty() || rng.gen_bool(0.7) => {
                    names.push(dim.clone());
                    at = *target;
                }
                _ => break,
            }
        }
        if names.is_empty() || (primitive && names.len() < max_rank && rng.gen_bool(0.3)) {
            names.push("v".to_string());
        }
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        self.db.schema().path(&self.names[from], &names).unwrap()
    }

    /// `a` is reachable from `b` by references (reflexive).
    pub fn concept_leq(&self, a: usize, b: usize) -> bool {
        a == b || self.refs[a].iter().any(|(_, t)| self.concept_leq(*t, b))
    }
}

/// A member of an element set or primitive domain.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Item {
    Element(ElementId),
    Value(Value),
}

pub fn items(set: &ElementSet) -> BTreeSet<Item> {
    match set.domain() {
        Domain::Collection(_) => set.elements().map(Item::Element).collect(),
        Domain::Primitive(_) => set.value_iter().cloned().map(Item::Value).collect(),
    }
}

/// Brute-force reference semantics over the full order relation.
pub struct Oracle<'a> {
    pub rdb: &'a RandomDb,
    /// Reflexive-transitive greater elements of each element.
    pub up: BTreeMap<ElementId, BTreeSet<ElementId>>,
}

impl<'a> Oracle<'a> {
    pub fn new(rdb: &'a RandomDb) -> Self {
        let db = &rdb.db;
        let mut up: BTreeMap<ElementId, BTreeSet<ElementId>> = BTreeMap::new();
        for (i, name) in rdb.names.iter().enumerate() {
            for e in db.elements(name).unwrap() {
                let mut mine = BTreeSet::from([e]);
                for (dim, _) in &rdb.refs[i] {
                    if let FieldValue::Element(g) = db.field(e, dim).unwrap() {
                        mine.extend(up[&g].iter().copied());
                    }
                }
                up.insert(e, mine);
            }
        }
        Oracle { rdb, up }
    }

    fn all(&self, collection: &str) -> Vec<ElementId> {
        self.rdb.db.elements(collection).unwrap().collect()
    }

    pub fn leq(&self, a: ElementId, b: ElementId) -> bool {
        self.up[&a].contains(&b)
    }

    pub fn follow(&self, e: ElementId, path: &DimensionPath) -> Option<Item> {
        let mut at = e;
        let n = path.segments().len();
        for (i, d) in path.segments().iter().enumerate() {
            match self.rdb.db.field(at, &d.name).unwrap() {
                FieldValue::Element(g) => at = g,
                FieldValue::Value(v) if i + 1 == n => return Some(Item::Value(v.clone())),
                _ => return None,
            }
        }
        Some(Item::Element(at))
    }

    pub fn project(&self, source: &BTreeSet<Item>, path: &DimensionPath) -> BTreeSet<Item> {
        source
            .iter()
            .filter_map(|s| match s {
                Item::Element(e) => self.follow(*e, path),
                Item::Value(_) => None,
            })
            .collect()
    }

    pub fn deproject(&self, source: &BTreeSet<Item>, path: &DimensionPath, target: &str) -> BTreeSet<Item> {
        self.all(target)
            .into_iter()
            .filter(|t| self.follow(*t, path).is_some_and(|x| source.contains(&x)))
            .map(Item::Element)
            .collect()
    }

    pub fn star_project(&self, source: &BTreeSet<Item>, target: &str) -> BTreeSet<Item> {
        self.all(target)
            .into_iter()
            .filter(|t| {
                source
                    .iter()
                    .any(|s| matches!(s, Item::Element(s) if self.leq(*s, *t)))
            })
            .map(Item::Element)
            .collect()
    }

    pub fn star_deproject(&self, source: &BTreeSet<Item>, target: &str) -> BTreeSet<Item> {
        self.all(target)
            .into_iter()
            .filter(|t| {
                source
                    .iter()
                    .any(|s| matches!(s, Item::Element(s) if self.leq(*t, *s)))
            })
            .map(Item::Element)
            .collect()
    }

    pub fn intersect(&self, sources: &[BTreeSet<Item>], target: &str) -> BTreeSet<Item> {
        self.all(target)
            .into_iter()
            .map(Item::Element)
            .filter(|t| sources.iter().all(|s| self.star_deproject(s, target).contains(t)))
            .collect()
    }

    /// Maximal collections strictly below both.
    pub fn common_lessers(&self, a: usize, b: usize) -> Vec<usize> {
        let r = self.rdb;
        let common: Vec<usize> = (0..r.names.len())
            .filter(|&c| c != a && c != b && r.concept_leq(c, a) && r.concept_leq(c, b))
            .collect();
        common
            .iter()
            .copied()
            .filter(|&c| !common.iter().any(|&d| d != c && r.concept_leq(c, d)))
            .collect()
    }

    /// The inferred target set and whether the independence rule applied.
    pub fn infer(&self, source: &BTreeSet<Item>, from: usize, target: usize) -> (BTreeSet<Item>, bool) {
        let r = self.rdb;
        let t = &r.names[target];
        if from == target {
            return (source.clone(), false);
        }
        if r.concept_leq(from, target) {
            return (self.star_project(source, t), false);
        }
        if r.concept_leq(target, from) {
            return (self.star_deproject(source, t), false);
        }
        let lessers = self.common_lessers(from, target);
        if lessers.is_empty() {
            return (self.all(t).into_iter().map(Item::Element).collect(), true);
        }
        let out = self
            .all(t)
            .into_iter()
            .filter(|&x| {
                lessers.iter().any(|&w| {
                    self.all(&r.names[w]).into_iter().any(|e| {
                        self.leq(e, x)
                            && source
                                .iter()
                                .any(|s| matches!(s, Item::Element(s) if self.leq(e, *s)))
                    })
                })
            })
            .map(Item::Element)
            .collect();
        (out, false)
    }
}
