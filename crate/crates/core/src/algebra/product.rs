use std::collections::{BTreeSet, HashMap};

use super::ops::{star_deproject, star_project};
use super::set::ElementSet;
use crate::error::{Error, Result};
use crate::model::{Database, Destination, ElementId, Schema};
use crate::predicate::{eval_operand, CmpOp, Condition, Key, Operand};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factor {
    pub alias: String,
    pub collection: String,
}

/// A virtual bottom collection: the Cartesian product of its factors,
/// filtered by a predicate over alias-qualified paths. Each factor is an
/// immediate greater collection of the product.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductCollection {
    name: String,
    factors: Vec<Factor>,
    predicate: Condition,
}

/// Validates factors and predicate. Operand aliases in `predicate` are
/// factor indexes.
pub fn make_product(
    schema: &Schema,
    name: impl Into<String>,
    factors: Vec<(String, String)>,
    predicate: Condition,
) -> Result<ProductCollection> {
    if factors.len() < 2 {
        return Err(Error::not_composable("a product needs at least two factors"));
    }
    let factors: Vec<Factor> = factors
        .into_iter()
        .map(|(alias, collection)| Factor { alias, collection })
        .collect();
    for (i, f) in factors.iter().enumerate() {
        if schema.concept(&f.collection).is_none() {
            return Err(Error::unknown_collection(&f.collection));
        }
        if factors[..i].iter().any(|g| g.alias == f.alias) {
            return Err(Error::DuplicateAlias {
                name: f.alias.clone(),
                at: None,
            });
        }
    }
    for (alias, path) in predicate.paths() {
        let factor = factors.get(alias).ok_or_else(|| Error::UnknownAlias {
            name: format!("#{alias}"),
            at: None,
        })?;
        if path.source() != factor.collection {
            return Err(Error::not_composable(format!(
                "`{}.{path}` starts at `{}`, not `{}`",
                factor.alias,
                path.source(),
                factor.collection
            )));
        }
    }
    Ok(ProductCollection {
        name: name.into(),
        factors,
        predicate,
    })
}

/// A set of product members, each one element per factor, sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductSet {
    name: String,
    factors: Vec<Factor>,
    members: Vec<Vec<ElementId>>,
}

impl ProductSet {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn members(&self) -> &[Vec<ElementId>] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

impl ProductCollection {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn predicate(&self) -> &Condition {
        &self.predicate
    }

    pub fn alias_index(&self, alias: &str) -> Option<usize> {
        self.factors.iter().position(|f| f.alias == alias)
    }

    /// All members.
    pub fn members(&self, db: &Database) -> Result<ProductSet> {
        self.restricted(db, &vec![None; self.factors.len()])
    }

    /// Members whose factor `i` lies in `restrict[i]` where given.
    pub fn restricted(&self, db: &Database, restrict: &[Option<&ElementSet>]) -> Result<ProductSet> {
        let mut members = BTreeSet::new();
        self.for_each_member(db, restrict, |m| {
            members.insert(m.to_vec());
        })?;
        Ok(self.set(members))
    }

    fn set(&self, members: BTreeSet<Vec<ElementId>>) -> ProductSet {
        ProductSet {
            name: self.name.clone(),
            factors: self.factors.clone(),
            members: members.into_iter().collect(),
        }
    }

    /// Enumerates members depth-first. Conjuncts are checked as soon as
    /// every alias they read is bound, and an equality between the newest
    /// alias and an earlier one is answered by a hash lookup.
    pub fn for_each_member(
        &self,
        db: &Database,
        restrict: &[Option<&ElementSet>],
        mut f: impl FnMut(&[ElementId]),
    ) -> Result<()> {
        let conjuncts = self.predicate.conjuncts();
        if conjuncts
            .iter()
            .any(|c| c.max_alias().is_none() && !c.eval(db, &[]))
        {
            return Ok(());
        }
        let mut levels = Vec::with_capacity(self.factors.len());
        for (j, factor) in self.factors.iter().enumerate() {
            let cid = db.collection_id(&factor.collection)?;
            let candidates: Vec<ElementId> = match restrict.get(j).copied().flatten() {
                Some(set) => set.elements().collect(),
                None => (0..db.collection_at(cid).len() as u32)
                    .map(|r| ElementId::new(cid, r))
                    .collect(),
            };
            let checks: Vec<&Condition> = conjuncts
                .iter()
                .copied()
                .filter(|c| c.max_alias() == Some(j))
                .collect();
            let join = checks.iter().find_map(|c| equi_join(c, j)).map(|(mine, other)| {
                let mut index: HashMap<Key, Vec<ElementId>> = HashMap::new();
                let mut binding = vec![ElementId::new(0, 0); j + 1];
                for &e in &candidates {
                    binding[j] = e;
                    if let Some(k) = eval_operand(db, mine, &binding).key() {
                        index.entry(k).or_default().push(e);
                    }
                }
                (other, index)
            });
            levels.push(Level {
                candidates,
                checks,
                join,
            });
        }
        let mut binding = Vec::with_capacity(levels.len());
        descend(db, &levels, &mut binding, &mut f);
        Ok(())
    }
}

struct Level<'a> {
    candidates: Vec<ElementId>,
    checks: Vec<&'a Condition>,
    join: Option<(&'a Operand, HashMap<Key, Vec<ElementId>>)>,
}

/// For `a.p == b.q` with one side on alias `j` and the other on an earlier
/// alias, returns (operand on j, operand on the earlier alias).
fn equi_join(c: &Condition, j: usize) -> Option<(&Operand, &Operand)> {
    let Condition::Compare(
        l @ Operand::Path { alias: la, path: lp },
        CmpOp::Eq,
        r @ Operand::Path { alias: ra, path: rp },
    ) = c
    else {
        return None;
    };
    let comparable = match (lp.destination(), rp.destination()) {
        (Destination::Concept(a), Destination::Concept(b)) => a == b,
        (Destination::Primitive(_), Destination::Primitive(_)) => true,
        _ => false,
    };
    match (comparable, *la == j, *ra == j) {
        (true, true, false) if *ra < j => Some((l, r)),
        (true, false, true) if *la < j => Some((r, l)),
        _ => None,
    }
}

fn descend(
    db: &Database,
    levels: &[Level<'_>],
    binding: &mut Vec<ElementId>,
    f: &mut impl FnMut(&[ElementId]),
) {
    let j = binding.len();
    let Some(level) = levels.get(j) else {
        f(binding);
        return;
    };
    let joined;
    let candidates: &[ElementId] = match &level.join {
        Some((other, index)) => match eval_operand(db, other, binding).key() {
            Some(k) => {
                joined = index.get(&k);
                joined.map(Vec::as_slice).unwrap_or(&[])
            }
            None => &[],
        },
        None => &level.candidates,
    };
    for &e in candidates {
        binding.push(e);
        if level.checks.iter().all(|c| c.eval(db, binding)) {
            descend(db, levels, binding, f);
        }
        binding.pop();
    }
}

/// Members with at least one factor element at or below a member of
/// `source`.
pub fn product_star_deproject(
    db: &Database,
    source: &ElementSet,
    product: &ProductCollection,
) -> Result<ProductSet> {
    let from = source
        .collection()
        .ok_or_else(|| Error::not_composable("cannot de-project primitive values into a product"))?;
    let schema = db.schema();
    let mut members = BTreeSet::new();
    let mut any = false;
    for (i, factor) in product.factors.iter().enumerate() {
        if !schema.is_less_or_equal(&factor.collection, from) {
            continue;
        }
        any = true;
        let allowed = star_deproject(db, source, &factor.collection)?;
        let mut restrict = vec![None; product.factors.len()];
        restrict[i] = Some(&allowed);
        product.for_each_member(db, &restrict, |m| {
            members.insert(m.to_vec());
        })?;
    }
    if !any {
        return Err(no_factor(from, product));
    }
    Ok(product.set(members))
}

/// Union of star projections of each factor that lies at or below `target`.
pub fn product_star_project(db: &Database, set: &ProductSet, target: &str) -> Result<ElementSet> {
    let schema = db.schema();
    let mut out = ElementSet::empty(db, target)?;
    let mut any = false;
    for i in 0..set.factors.len() {
        if !schema.is_less_or_equal(&set.factors[i].collection, target) {
            continue;
        }
        any = true;
        let elements = product_project(db, set, i)?;
        out.union_with(&star_project(db, &elements, target)?);
    }
    if !any {
        return Err(Error::NoPath {
            from: set.name.clone(),
            to: target.to_string(),
            hint: super::ops::NO_PATH_HINT,
            at: None,
        });
    }
    Ok(out)
}

/// The elements of factor `alias` over all members.
pub fn product_project(db: &Database, set: &ProductSet, alias: usize) -> Result<ElementSet> {
    let factor = set.factors.get(alias).ok_or_else(|| Error::UnknownAlias {
        name: format!("#{alias}"),
        at: None,
    })?;
    ElementSet::from_elements(db, &factor.collection, set.members.iter().map(|m| m[alias]))
}

/// Members whose factor `alias` is in `source`.
pub fn product_deproject(
    db: &Database,
    source: &ElementSet,
    product: &ProductCollection,
    alias: usize,
) -> Result<ProductSet> {
    let factor = product.factors.get(alias).ok_or_else(|| Error::UnknownAlias {
        name: format!("#{alias}"),
        at: None,
    })?;
    if source.collection() != Some(factor.collection.as_str()) {
        return Err(Error::not_composable(format!(
            "`{}` is in `{}`, the set is in {}",
            factor.alias,
            factor.collection,
            source.domain()
        )));
    }
    let mut restrict = vec![None; product.factors.len()];
    restrict[alias] = Some(source);
    product.restricted(db, &restrict)
}

fn no_factor(from: &str, product: &ProductCollection) -> Error {
    Error::NoPath {
        from: from.to_string(),
        to: product.name.clone(),
        hint: "no factor of the product lies at or below the source collection",
        at: None,
    }
}
