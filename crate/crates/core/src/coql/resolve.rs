use std::collections::BTreeMap;

use super::ast::{self, AggFn, Anchor, Hop, Ident, Literal, SetExpr, Step, Term};
use super::plan::{AnchorPlan, Filter, InferPlan, Op, QueryPlan, Route};
use crate::algebra::{
    common_lesser_collections, enumerate_up_paths, make_product, PrimitiveDomain, ProductCollection,
    INDEPENDENT_WARNING,
};
use crate::error::{Error, Position, Result};
use crate::model::{Destination, Dimension, DimensionPath, FieldType, Schema};
use crate::predicate::{is_numeric_path, Aggregate, Condition, Operand};
use crate::value::{Decimal, PrimitiveType, Value};

const UP_HINT: &str = "`->` only reaches greater collections; use `<-` to go down or `<-*->` to infer";
const DOWN_HINT: &str = "`<-` only reaches lesser collections; use `->` to go up or `<-*->` to infer";
const STAR_HINT: &str = "use `<-*->` to infer across collections that are not ordered";

/// Where the query stands after each step.
#[derive(Clone, Debug)]
enum Ctx {
    Coll(String),
    Prim(PrimitiveDomain),
    Product(Box<ProductCollection>),
}

impl Ctx {
    fn label(&self) -> String {
        match self {
            Ctx::Coll(c) => c.clone(),
            Ctx::Prim(p) => p.to_string(),
            Ctx::Product(p) => p.name().to_string(),
        }
    }
}

/// A set expression with its names bound.
enum Bound {
    Collection { name: String, filter: Option<Filter> },
    Product(ProductCollection),
}

/// Names visible to a predicate.
enum Scope<'s> {
    Single {
        collection: &'s str,
        alias: Option<&'s str>,
    },
    /// (alias, collection) per factor.
    Product(&'s [(String, String)]),
}

/// Binds a parsed query to a schema and the registered products.
pub fn resolve(
    query: &ast::Query,
    schema: &Schema,
    products: &BTreeMap<String, ProductCollection>,
) -> Result<QueryPlan> {
    Resolver { schema, products }.query(query)
}

struct Resolver<'a> {
    schema: &'a Schema,
    products: &'a BTreeMap<String, ProductCollection>,
}

fn not_composable(detail: impl Into<String>, at: Position) -> Error {
    Error::PathNotComposable {
        detail: detail.into(),
        at: Some(at),
    }
}

fn no_path(from: &str, to: &str, hint: &'static str, at: Position) -> Error {
    Error::NoPath {
        from: from.to_string(),
        to: to.to_string(),
        hint,
        at: Some(at),
    }
}

fn invalid(at: Position, message: impl Into<String>) -> Error {
    Error::InvalidQuery {
        at,
        message: message.into(),
    }
}

fn single(dim: Dimension) -> DimensionPath {
    DimensionPath::new(vec![dim]).expect("one segment always composes")
}

pub(crate) fn literal_value(lit: &Literal) -> Option<Value> {
    match lit {
        Literal::Str(s) => Some(Value::Str(s.clone())),
        Literal::Number(n) if !n.contains('.') => Some(match n.parse::<i64>() {
            Ok(i) => Value::Int(i),
            Err(_) => Value::Dec(Decimal::parse(n).expect("lexer yields plain numbers")),
        }),
        Literal::Number(n) => Some(Value::Dec(Decimal::parse(n).expect("lexer yields plain numbers"))),
        Literal::Null => None,
    }
}

impl Resolver<'_> {
    fn query(&self, q: &ast::Query) -> Result<QueryPlan> {
        let (anchor, anchor_text, mut ctx) = match &q.anchor {
            Anchor::Set(s) => {
                let (anchor, ctx) = match self.bind_set(s)? {
                    Bound::Collection { name, filter } => (
                        AnchorPlan::Collection {
                            collection: name.clone(),
                            filter,
                        },
                        Ctx::Coll(name),
                    ),
                    Bound::Product(p) => (AnchorPlan::Product(p.clone()), Ctx::Product(Box::new(p))),
                };
                (anchor, s.to_string(), ctx)
            }
            Anchor::Literals(lits, loc) => {
                let domain = self.literal_domain(q, loc.0)?;
                let mut values = Vec::new();
                for v in lits.iter().filter_map(literal_value) {
                    values.push(domain.ty.coerce(v).map_err(|detail| Error::TypeMismatch {
                        field: domain.to_string(),
                        detail,
                    })?);
                }
                let text: Vec<String> = lits.iter().map(ToString::to_string).collect();
                (
                    AnchorPlan::Values {
                        domain: domain.clone(),
                        values,
                    },
                    text.join(", "),
                    Ctx::Prim(domain),
                )
            }
        };
        let mut plan = QueryPlan {
            anchor,
            anchor_text,
            ops: Vec::new(),
            warnings: Vec::new(),
        };
        for step in &q.steps {
            self.step(step, &mut ctx, &mut plan)?;
        }
        Ok(plan)
    }

    /// The primitive domain a literal anchor belongs to: the field named by
    /// the first de-projection hop.
    fn literal_domain(&self, q: &ast::Query, at: Position) -> Result<PrimitiveDomain> {
        let hop = match q.steps.first() {
            Some(Step::Deproject(hops)) => &hops[0],
            _ => return Err(invalid(at, "a literal anchor must be followed by `<- field`")),
        };
        let (field, owner) = match hop {
            Hop::Dim(d) => (d, None),
            Hop::DimSet(d, s) => (d, Some(s)),
            Hop::Set(s) => {
                return Err(invalid(
                    s.pos(),
                    "a literal anchor must be followed by `<- field`",
                ))
            }
        };
        let mut candidates: Vec<PrimitiveDomain> = self
            .schema
            .concepts()
            .iter()
            .filter(|c| owner.is_none_or(|s| s.factors[0].collection.name == c.name))
            .filter_map(|c| {
                let (_, f) = c.field(&field.name)?;
                match f.ty {
                    FieldType::Primitive { ty, .. } => Some(PrimitiveDomain {
                        concept: c.name.clone(),
                        field: f.name.clone(),
                        ty,
                    }),
                    FieldType::Reference(_) => None,
                }
            })
            .collect();
        match candidates.len() {
            1 => Ok(candidates.remove(0)),
            0 => Err(invalid(
                field.pos(),
                format!("no concept has a primitive field `{}`", field.name),
            )),
            _ => Err(Error::AmbiguousPath {
                from: "literals".into(),
                to: field.name.clone(),
                candidates: candidates.iter().map(ToString::to_string).collect(),
                at: field.pos(),
            }),
        }
    }

    fn step(&self, step: &Step, ctx: &mut Ctx, plan: &mut QueryPlan) -> Result<()> {
        let ops = &mut plan.ops;
        match step {
            Step::Project(hops) => {
                for hop in hops {
                    match hop {
                        Hop::Dim(d) => self.project_dim(d, ctx, ops)?,
                        Hop::Set(s) => self.project_set(s, ctx, ops)?,
                        Hop::DimSet(d, s) => {
                            self.project_dim(d, ctx, ops)?;
                            self.project_set(s, ctx, ops)?;
                        }
                    }
                }
            }
            Step::Deproject(hops) => {
                for hop in hops {
                    match hop {
                        Hop::Dim(d) => self.deproject_dim(d, None, ctx, ops)?,
                        Hop::Set(s) => self.deproject_set(s, ctx, ops)?,
                        Hop::DimSet(d, s) => self.deproject_dim(d, Some(s), ctx, ops)?,
                    }
                }
            }
            Step::StarProject(s) => self.star_project(s, ctx, ops)?,
            Step::StarDeproject(s) => self.star_deproject(s, ctx, ops)?,
            Step::Infer(s) => self.infer(s, ctx, plan)?,
        }
        Ok(())
    }

    fn project_dim(&self, d: &Ident, ctx: &mut Ctx, ops: &mut Vec<Op>) -> Result<()> {
        match ctx {
            Ctx::Coll(c) => {
                let dim = self
                    .schema
                    .dimension(c, &d.name)
                    .ok_or_else(|| Error::UnknownDimension {
                        name: d.name.clone(),
                        concept: c.clone(),
                        at: Some(d.pos()),
                    })?;
                let next = match &dim.destination {
                    Destination::Concept(g) => Ctx::Coll(g.clone()),
                    Destination::Primitive(ty) => Ctx::Prim(PrimitiveDomain {
                        concept: c.clone(),
                        field: dim.name.clone(),
                        ty: *ty,
                    }),
                };
                ops.push(Op::Project {
                    path: single(dim),
                    filter: None,
                });
                *ctx = next;
            }
            Ctx::Prim(p) => {
                return Err(not_composable(
                    format!("`{}` follows the primitive domain `{p}`", d.name),
                    d.pos(),
                ))
            }
            Ctx::Product(p) => {
                let alias = p.alias_index(&d.name).ok_or_else(|| Error::UnknownAlias {
                    name: d.name.clone(),
                    at: Some(d.pos()),
                })?;
                let factor = p.factors()[alias].clone();
                *ctx = Ctx::Coll(factor.collection.clone());
                ops.push(Op::ProductProject { alias, factor });
            }
        }
        Ok(())
    }

    fn project_set(&self, s: &SetExpr, ctx: &mut Ctx, ops: &mut Vec<Op>) -> Result<()> {
        let (target, filter) = match self.bind_set(s)? {
            Bound::Collection { name, filter } => (name, filter),
            Bound::Product(p) => {
                return Err(not_composable(
                    format!(
                        "`{}` is a product, which lies below its factors; use `<-`",
                        p.name()
                    ),
                    s.pos(),
                ))
            }
        };
        match ctx {
            Ctx::Coll(c) if *c == target => {
                if filter.is_some() {
                    ops.push(Op::Project {
                        path: DimensionPath::identity(c.as_str()),
                        filter,
                    });
                }
            }
            Ctx::Coll(c) => {
                let mut paths = enumerate_up_paths(self.schema, c, &target);
                match paths.len() {
                    0 => return Err(no_path(c, &target, UP_HINT, s.pos())),
                    1 => ops.push(Op::Project {
                        path: paths.remove(0),
                        filter,
                    }),
                    _ => {
                        return Err(Error::AmbiguousPath {
                            from: c.clone(),
                            to: target,
                            candidates: paths.iter().map(ToString::to_string).collect(),
                            at: s.pos(),
                        })
                    }
                }
            }
            Ctx::Prim(p) => {
                return Err(not_composable(
                    format!("`{target}` follows the primitive domain `{p}`"),
                    s.pos(),
                ))
            }
            Ctx::Product(p) => {
                let mut candidates = Vec::new();
                for (i, f) in p.factors().iter().enumerate() {
                    if f.collection == target {
                        candidates.push((i, DimensionPath::identity(target.as_str())));
                    } else {
                        for path in enumerate_up_paths(self.schema, &f.collection, &target) {
                            candidates.push((i, path));
                        }
                    }
                }
                match candidates.len() {
                    0 => return Err(no_path(p.name(), &target, UP_HINT, s.pos())),
                    1 => {
                        let (alias, path) = candidates.remove(0);
                        let factor = p.factors()[alias].clone();
                        ops.push(Op::ProductProject { alias, factor });
                        if path.rank() > 0 || filter.is_some() {
                            ops.push(Op::Project { path, filter });
                        }
                    }
                    _ => {
                        return Err(Error::AmbiguousPath {
                            from: p.name().to_string(),
                            to: target,
                            candidates: candidates
                                .iter()
                                .map(|(i, path)| match path.rank() {
                                    0 => p.factors()[*i].alias.clone(),
                                    _ => format!("{}.{path}", p.factors()[*i].alias),
                                })
                                .collect(),
                            at: s.pos(),
                        })
                    }
                }
            }
        }
        *ctx = Ctx::Coll(target);
        Ok(())
    }

    fn deproject_dim(
        &self,
        d: &Ident,
        owner: Option<&SetExpr>,
        ctx: &mut Ctx,
        ops: &mut Vec<Op>,
    ) -> Result<()> {
        if let Ctx::Product(p) = ctx {
            return Err(not_composable(
                format!("nothing lies below the product `{}`", p.name()),
                d.pos(),
            ));
        }
        let (dim, filter) = match owner {
            Some(s) => match self.bind_set(s)? {
                Bound::Product(p) => {
                    let alias = p.alias_index(&d.name).ok_or_else(|| Error::UnknownAlias {
                        name: d.name.clone(),
                        at: Some(d.pos()),
                    })?;
                    let factor = &p.factors()[alias];
                    if !matches!(ctx, Ctx::Coll(c) if *c == factor.collection) {
                        return Err(not_composable(
                            format!(
                                "`{}` is in `{}`, not `{}`",
                                factor.alias,
                                factor.collection,
                                ctx.label()
                            ),
                            d.pos(),
                        ));
                    }
                    ops.push(Op::ProductDeproject {
                        product: p.clone(),
                        alias,
                    });
                    *ctx = Ctx::Product(Box::new(p));
                    return Ok(());
                }
                Bound::Collection { name, filter } => {
                    let dim =
                        self.schema
                            .dimension(&name, &d.name)
                            .ok_or_else(|| Error::UnknownDimension {
                                name: d.name.clone(),
                                concept: name.clone(),
                                at: Some(d.pos()),
                            })?;
                    let fits = match (&ctx, &dim.destination) {
                        (Ctx::Coll(c), Destination::Concept(g)) => c == g,
                        (Ctx::Prim(_), Destination::Primitive(_)) => true,
                        _ => false,
                    };
                    if !fits {
                        return Err(not_composable(
                            format!("`{name}.{}` does not lead into `{}`", d.name, ctx.label()),
                            d.pos(),
                        ));
                    }
                    (dim, filter)
                }
            },
            None => {
                let mut candidates = self.lesser_dimensions(&d.name, ctx);
                match candidates.len() {
                    0 => {
                        return Err(Error::UnknownDimension {
                            name: d.name.clone(),
                            concept: ctx.label(),
                            at: Some(d.pos()),
                        })
                    }
                    1 => (candidates.remove(0), None),
                    _ => {
                        return Err(Error::AmbiguousPath {
                            from: ctx.label(),
                            to: d.name.clone(),
                            candidates: candidates
                                .iter()
                                .map(|c| format!("{}.{}", c.source, c.name))
                                .collect(),
                            at: d.pos(),
                        })
                    }
                }
            }
        };
        let target = dim.source.clone();
        ops.push(Op::Deproject {
            path: single(dim),
            target: target.clone(),
            filter,
        });
        *ctx = Ctx::Coll(target);
        Ok(())
    }

    /// Dimensions named `name` that lead into the current domain.
    fn lesser_dimensions(&self, name: &str, ctx: &Ctx) -> Vec<Dimension> {
        match ctx {
            Ctx::Coll(c) => self
                .schema
                .dimensions()
                .into_iter()
                .filter(|d| d.name == name && d.destination_concept() == Some(c.as_str()))
                .collect(),
            Ctx::Prim(p) => {
                if let Some(own) = self
                    .schema
                    .dimension(&p.concept, name)
                    .filter(|d| !d.is_reference())
                {
                    return vec![own];
                }
                self.schema
                    .concepts()
                    .iter()
                    .filter_map(|c| self.schema.dimension(&c.name, name))
                    .filter(|d| !d.is_reference())
                    .collect()
            }
            Ctx::Product(_) => Vec::new(),
        }
    }

    fn deproject_set(&self, s: &SetExpr, ctx: &mut Ctx, ops: &mut Vec<Op>) -> Result<()> {
        let (lesser, filter) = match self.bind_set(s)? {
            Bound::Product(p) => {
                let Ctx::Coll(c) = &*ctx else {
                    return Err(not_composable(
                        format!("cannot de-project `{}` into a product", ctx.label()),
                        s.pos(),
                    ));
                };
                let aliases: Vec<usize> = (0..p.factors().len())
                    .filter(|&i| p.factors()[i].collection == *c)
                    .collect();
                match aliases[..] {
                    [alias] => {
                        ops.push(Op::ProductDeproject {
                            product: p.clone(),
                            alias,
                        });
                        *ctx = Ctx::Product(Box::new(p));
                        return Ok(());
                    }
                    [] => {
                        return Err(not_composable(
                            format!("no factor of `{}` is in `{c}`; use `<-*`", p.name()),
                            s.pos(),
                        ))
                    }
                    _ => {
                        return Err(Error::AmbiguousPath {
                            from: c.clone(),
                            to: p.name().to_string(),
                            candidates: aliases.iter().map(|&i| p.factors()[i].alias.clone()).collect(),
                            at: s.pos(),
                        })
                    }
                }
            }
            Bound::Collection { name, filter } => (name, filter),
        };
        let mut paths = match &*ctx {
            Ctx::Coll(c) if *c == lesser => {
                if filter.is_some() {
                    ops.push(Op::Deproject {
                        path: DimensionPath::identity(c.as_str()),
                        target: lesser.clone(),
                        filter,
                    });
                }
                *ctx = Ctx::Coll(lesser);
                return Ok(());
            }
            Ctx::Coll(c) => enumerate_up_paths(self.schema, &lesser, c),
            Ctx::Prim(p) => {
                let field = self
                    .schema
                    .dimension(&p.concept, &p.field)
                    .expect("domain of a known field");
                let ups = if lesser == p.concept {
                    vec![DimensionPath::identity(lesser.as_str())]
                } else {
                    enumerate_up_paths(self.schema, &lesser, &p.concept)
                };
                ups.into_iter()
                    .map(|up| up.then(field.clone()).expect("ends at the field's concept"))
                    .collect()
            }
            Ctx::Product(p) => {
                return Err(not_composable(
                    format!("nothing lies below the product `{}`", p.name()),
                    s.pos(),
                ))
            }
        };
        match paths.len() {
            0 => return Err(no_path(&ctx.label(), &lesser, DOWN_HINT, s.pos())),
            1 => ops.push(Op::Deproject {
                path: paths.remove(0),
                target: lesser.clone(),
                filter,
            }),
            _ => {
                return Err(Error::AmbiguousPath {
                    from: ctx.label(),
                    to: lesser,
                    candidates: paths.iter().map(ToString::to_string).collect(),
                    at: s.pos(),
                })
            }
        }
        *ctx = Ctx::Coll(lesser);
        Ok(())
    }

    fn star_project(&self, s: &SetExpr, ctx: &mut Ctx, ops: &mut Vec<Op>) -> Result<()> {
        let (target, filter) = match self.bind_set(s)? {
            Bound::Collection { name, filter } => (name, filter),
            Bound::Product(p) => {
                return Err(not_composable(
                    format!(
                        "`{}` is a product, which lies below its factors; use `<-*`",
                        p.name()
                    ),
                    s.pos(),
                ))
            }
        };
        match &*ctx {
            Ctx::Coll(c) => {
                let paths = if *c == target {
                    vec![DimensionPath::identity(c.as_str())]
                } else {
                    enumerate_up_paths(self.schema, c, &target)
                };
                if paths.is_empty() {
                    return Err(no_path(c, &target, STAR_HINT, s.pos()));
                }
                ops.push(Op::StarProject {
                    target: target.clone(),
                    paths,
                    filter,
                });
            }
            Ctx::Product(p) => {
                self.product_reaches(p, &target, s.pos())?;
                ops.push(Op::ProductStarProject {
                    target: target.clone(),
                    filter,
                });
            }
            Ctx::Prim(p) => {
                return Err(not_composable(
                    format!("`{target}` follows the primitive domain `{p}`"),
                    s.pos(),
                ))
            }
        }
        *ctx = Ctx::Coll(target);
        Ok(())
    }

    fn product_reaches(&self, p: &ProductCollection, collection: &str, at: Position) -> Result<()> {
        if p.factors()
            .iter()
            .any(|f| self.schema.is_less_or_equal(&f.collection, collection))
        {
            Ok(())
        } else {
            Err(no_path(p.name(), collection, STAR_HINT, at))
        }
    }

    fn star_deproject(&self, s: &SetExpr, ctx: &mut Ctx, ops: &mut Vec<Op>) -> Result<()> {
        let Ctx::Coll(c) = &*ctx else {
            return Err(not_composable(
                format!("`<-*` needs a collection, not `{}`", ctx.label()),
                s.pos(),
            ));
        };
        match self.bind_set(s)? {
            Bound::Product(p) => {
                self.product_reaches(&p, c, s.pos())?;
                ops.push(Op::ProductStarDeproject(p.clone()));
                *ctx = Ctx::Product(Box::new(p));
            }
            Bound::Collection { name, filter } => {
                let paths = if *c == name {
                    vec![DimensionPath::identity(c.as_str())]
                } else {
                    enumerate_up_paths(self.schema, &name, c)
                };
                if paths.is_empty() {
                    return Err(no_path(c, &name, STAR_HINT, s.pos()));
                }
                ops.push(Op::StarDeproject {
                    target: name.clone(),
                    paths,
                    filter,
                });
                *ctx = Ctx::Coll(name);
            }
        }
        Ok(())
    }

    fn infer(&self, s: &SetExpr, ctx: &mut Ctx, plan: &mut QueryPlan) -> Result<()> {
        let source = match &*ctx {
            Ctx::Coll(c) => c.clone(),
            Ctx::Product(_) => return self.star_project(s, ctx, &mut plan.ops),
            Ctx::Prim(p) => {
                return Err(not_composable(
                    format!("`<-*->` needs a collection, not the primitive domain `{p}`"),
                    s.pos(),
                ))
            }
        };
        let (target, filter) = match self.bind_set(s)? {
            Bound::Product(_) => return self.star_deproject(s, ctx, &mut plan.ops),
            Bound::Collection { name, filter } => (name, filter),
        };
        let infer = self.infer_plan(&source, &target);
        if infer == InferPlan::Independent {
            plan.warnings.push(INDEPENDENT_WARNING.to_string());
        }
        plan.ops.push(Op::Infer {
            source,
            target: target.clone(),
            plan: infer,
            filter,
        });
        *ctx = Ctx::Coll(target);
        Ok(())
    }

    fn infer_plan(&self, source: &str, target: &str) -> InferPlan {
        let schema = self.schema;
        let route = |via: &str| Route {
            via: via.to_string(),
            down: if via == source {
                vec![DimensionPath::identity(via)]
            } else {
                enumerate_up_paths(schema, via, source)
            },
            up: if via == target {
                vec![DimensionPath::identity(via)]
            } else {
                enumerate_up_paths(schema, via, target)
            },
        };
        if source == target || schema.is_less(source, target) {
            return InferPlan::Routes(vec![route(source)]);
        }
        if schema.is_less(target, source) {
            return InferPlan::Routes(vec![route(target)]);
        }
        let lessers = common_lesser_collections(schema, source, target);
        if !lessers.is_empty() {
            return InferPlan::Routes(lessers.iter().map(|w| route(w)).collect());
        }
        let below = |p: &ProductCollection, c: &str| {
            p.factors()
                .iter()
                .any(|f| schema.is_less_or_equal(&f.collection, c))
        };
        let products: Vec<ProductCollection> = self
            .products
            .values()
            .filter(|p| below(p, source) && below(p, target))
            .cloned()
            .collect();
        if products.is_empty() {
            InferPlan::Independent
        } else {
            InferPlan::Products(products)
        }
    }

    fn bind_set(&self, s: &SetExpr) -> Result<Bound> {
        if let [factor] = &s.factors[..] {
            let name = &factor.collection.name;
            if let Some(p) = self.products.get(name) {
                let Some(pred) = &s.predicate else {
                    return Ok(Bound::Product(p.clone()));
                };
                let factors: Vec<(String, String)> = p
                    .factors()
                    .iter()
                    .map(|f| (f.alias.clone(), f.collection.clone()))
                    .collect();
                let extra = self.predicate(pred, &Scope::Product(&factors))?;
                let condition = Condition::and(vec![p.predicate().clone(), extra]);
                return Ok(Bound::Product(make_product(
                    self.schema,
                    s.to_string(),
                    factors,
                    condition,
                )?));
            }
            if self.schema.concept(name).is_none() {
                return Err(Error::UnknownCollection {
                    name: name.clone(),
                    at: Some(factor.collection.pos()),
                });
            }
            let filter = match &s.predicate {
                Some(pred) => {
                    let scope = Scope::Single {
                        collection: name,
                        alias: factor.alias.as_ref().map(|a| a.name.as_str()),
                    };
                    Some(Filter {
                        condition: self.predicate(pred, &scope)?,
                        text: pred.to_string(),
                    })
                }
                None => None,
            };
            return Ok(Bound::Collection {
                name: name.clone(),
                filter,
            });
        }
        let mut factors: Vec<(String, String)> = Vec::new();
        for f in &s.factors {
            let name = &f.collection.name;
            if self.schema.concept(name).is_none() {
                if self.products.contains_key(name) {
                    return Err(invalid(
                        f.collection.pos(),
                        format!("product `{name}` cannot be a factor"),
                    ));
                }
                return Err(Error::UnknownCollection {
                    name: name.clone(),
                    at: Some(f.collection.pos()),
                });
            }
            let alias = f.alias.as_ref().unwrap_or(&f.collection);
            if factors.iter().any(|(a, _)| *a == alias.name) {
                return Err(Error::DuplicateAlias {
                    name: alias.name.clone(),
                    at: Some(alias.pos()),
                });
            }
            factors.push((alias.name.clone(), name.clone()));
        }
        let condition = match &s.predicate {
            Some(pred) => self.predicate(pred, &Scope::Product(&factors))?,
            None => Condition::True,
        };
        Ok(Bound::Product(make_product(
            self.schema,
            s.to_string(),
            factors,
            condition,
        )?))
    }

    fn predicate(&self, pred: &ast::Predicate, scope: &Scope<'_>) -> Result<Condition> {
        let mut ors = Vec::new();
        for conj in &pred.0 {
            let mut ands = Vec::new();
            for neg in &conj.0 {
                let c = self.comparison(&neg.cmp, scope)?;
                ands.push(if neg.negated {
                    Condition::Not(Box::new(c))
                } else {
                    c
                });
            }
            ors.push(if ands.len() == 1 {
                ands.remove(0)
            } else {
                Condition::And(ands)
            });
        }
        Ok(if ors.len() == 1 {
            ors.remove(0)
        } else {
            Condition::Or(ors)
        })
    }

    fn comparison(&self, cmp: &ast::Comparison, scope: &Scope<'_>) -> Result<Condition> {
        let Some((op, rhs)) = &cmp.rhs else {
            return match &cmp.lhs {
                Term::Group(p, _) => self.predicate(p, scope),
                term => Ok(Condition::Present(self.operand(term, scope)?.0)),
            };
        };
        let (mut a, ta) = self.operand(&cmp.lhs, scope)?;
        let (mut b, tb) = self.operand(rhs, scope)?;
        coerce_literal(&mut b, ta, rhs)?;
        coerce_literal(&mut a, tb, &cmp.lhs)?;
        Ok(Condition::compare(a, *op, b))
    }

    /// The operand and, for typed operands, the primitive type it yields.
    fn operand(&self, term: &Term, scope: &Scope<'_>) -> Result<(Operand, Option<PrimitiveType>)> {
        match term {
            Term::Literal(lit, _) => Ok(match literal_value(lit) {
                Some(v) => (Operand::Literal(v), None),
                None => (Operand::Null, None),
            }),
            Term::Path(idents) => {
                let (alias, path) = self.path(idents, scope)?;
                let ty = match path.destination() {
                    Destination::Primitive(t) => Some(t),
                    Destination::Concept(_) => None,
                };
                Ok((Operand::path(alias, path), ty))
            }
            Term::Group(_, loc) => Err(invalid(loc.0, "a parenthesized condition cannot be compared")),
            Term::Aggregate(agg) => {
                let Scope::Single { collection, .. } = scope else {
                    return Err(invalid(
                        agg.loc.0,
                        "aggregates are not allowed in product predicates",
                    ));
                };
                let (inner, filter) = match self.bind_set(&agg.set)? {
                    Bound::Collection { name, filter } => (name, filter),
                    Bound::Product(_) => {
                        return Err(invalid(agg.set.pos(), "aggregates range over one collection"))
                    }
                };
                let dimension = self
                    .schema
                    .dimension(&inner, &agg.dimension.name)
                    .ok_or_else(|| Error::UnknownDimension {
                        name: agg.dimension.name.clone(),
                        concept: inner.clone(),
                        at: Some(agg.dimension.pos()),
                    })?;
                if dimension.destination_concept() != Some(*collection) {
                    return Err(not_composable(
                        format!("`{inner}.{}` does not point to `{collection}`", dimension.name),
                        agg.dimension.pos(),
                    ));
                }
                let aggregate = Aggregate {
                    dimension,
                    filter: filter.map(|f| Box::new(f.condition)),
                };
                match (agg.func, &agg.path) {
                    (AggFn::Sum, Some(idents)) => {
                        let scope = Scope::Single {
                            collection: &inner,
                            alias: agg.set.factors[0].alias.as_ref().map(|a| a.name.as_str()),
                        };
                        let (_, path) = self.path(idents, &scope)?;
                        if !is_numeric_path(&path) {
                            return Err(Error::NonNumericPath(path.to_string()));
                        }
                        Ok((Operand::Sum(aggregate, path), Some(PrimitiveType::Decimal)))
                    }
                    (AggFn::Count, Some(idents)) => Err(invalid(idents[0].pos(), "COUNT takes no path")),
                    (_, None) => Ok((Operand::Count(aggregate), Some(PrimitiveType::Integer))),
                }
            }
        }
    }

    fn path(&self, idents: &[Ident], scope: &Scope<'_>) -> Result<(usize, DimensionPath)> {
        let at = idents[0].pos();
        let names: Vec<&str> = idents.iter().map(|i| i.name.as_str()).collect();
        let (alias, collection, rest) =
            match scope {
                Scope::Single { collection, alias } => {
                    let qualified = Some(names[0]) == *alias
                        || (names[0] == *collection && self.schema.dimension(collection, names[0]).is_none());
                    let rest = if qualified { &names[1..] } else { &names[..] };
                    (0, *collection, rest)
                }
                Scope::Product(factors) => {
                    let i = factors.iter().position(|(a, _)| a == names[0]).ok_or_else(|| {
                        Error::UnknownAlias {
                            name: names[0].to_string(),
                            at: Some(at),
                        }
                    })?;
                    (i, factors[i].1.as_str(), &names[1..])
                }
            };
        let path = self.schema.path(collection, rest).map_err(|e| e.located(at))?;
        Ok((alias, path))
    }
}

/// Checks a literal against the type of the other side of a comparison,
/// converting it where that is lossless (dates given as strings).
fn coerce_literal(operand: &mut Operand, other: Option<PrimitiveType>, term: &Term) -> Result<()> {
    let (Operand::Literal(v), Some(ty)) = (&*operand, other) else {
        return Ok(());
    };
    let ok = match (ty, v) {
        (t, Value::Int(_) | Value::Dec(_)) if t.is_numeric() => true,
        (PrimitiveType::Date, Value::Str(_)) => {
            let date = ty
                .coerce(v.clone())
                .map_err(|detail| literal_mismatch(term, detail))?;
            *operand = Operand::Literal(date);
            return Ok(());
        }
        (t, v) => t.coerce(v.clone()).is_ok(),
    };
    if ok {
        Ok(())
    } else {
        Err(literal_mismatch(
            term,
            format!("cannot compare {ty} with {} `{v}`", v.type_name()),
        ))
    }
}

fn literal_mismatch(term: &Term, detail: String) -> Error {
    Error::TypeMismatch {
        field: term.to_string(),
        detail,
    }
}
