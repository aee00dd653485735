//! An executable database: catalog, CSV ingestion, registered products and
//! query execution over immutable snapshots.

mod ingest;
mod result;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;
use std::sync::Arc;

pub use ingest::IngestReport;
pub use result::{Cell, Format, ResultSet, Row};

use crate::algebra::{
    deproject, deproject_union, make_product, product_deproject, product_project, product_star_deproject,
    product_star_project, project, project_union, ElementSet, ProductCollection, ProductSet,
};
use crate::coql::ast::{SetExpr, Statement};
use crate::coql::{self, AnchorPlan, Filter, InferPlan, Op, QueryPlan};
use crate::error::{Error, Result};
use crate::model::{build_schema, Database, Schema};

/// The set a query holds between steps.
enum Current {
    Set(ElementSet),
    Product(ProductSet),
}

#[derive(Debug, Default, Clone)]
pub struct Engine {
    db: Option<Arc<Database>>,
    products: BTreeMap<String, ProductCollection>,
}

/// What a schema load produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaSummary {
    /// Collections with greater ones first.
    pub collections: Vec<String>,
    pub warnings: Vec<String>,
}

/// Result of one script statement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Defined(String),
    Rows(ResultSet),
}

impl Engine {
    pub fn new() -> Self {
        Engine::default()
    }

    /// An engine over an already built database.
    pub fn with_database(db: Database) -> Self {
        Engine {
            db: Some(Arc::new(db)),
            products: BTreeMap::new(),
        }
    }

    pub fn load_schema(&mut self, ddl: &str) -> Result<SchemaSummary> {
        if self.db.is_some() {
            return Err(Error::SchemaLocked);
        }
        let schema = build_schema(coql::concepts_from_ddl(ddl)?)?;
        let mut warnings = Vec::new();
        if schema.is_empty() {
            warnings.push("schema defines no concepts".to_string());
        }
        let collections = schema.topological_order().into_iter().map(String::from).collect();
        self.db = Some(Arc::new(Database::new(schema)));
        Ok(SchemaSummary {
            collections,
            warnings,
        })
    }

    pub fn load_schema_file(&mut self, path: impl AsRef<Path>) -> Result<SchemaSummary> {
        let text = std::fs::read_to_string(path)?;
        self.load_schema(&text)
    }

    /// The current snapshot. Later loads never change it.
    pub fn snapshot(&self) -> Arc<Database> {
        match &self.db {
            Some(db) => Arc::clone(db),
            None => Arc::new(Database::new(
                build_schema(Vec::new()).expect("empty schema is valid"),
            )),
        }
    }

    pub fn schema(&self) -> Option<&Schema> {
        self.db.as_deref().map(Database::schema)
    }

    fn db(&self) -> Result<&Database> {
        self.db
            .as_deref()
            .ok_or_else(|| Error::unknown_collection("<no schema loaded>"))
    }

    /// Loads one CSV batch. A failed strict load leaves the snapshot as it was.
    pub fn load_csv(&mut self, collection: &str, input: impl Read, strict: bool) -> Result<IngestReport> {
        let mut next = self.db()?.clone();
        let report = ingest::load_rows(&mut next, collection, input, strict)?;
        next.bump_version();
        self.db = Some(Arc::new(next));
        Ok(report)
    }

    pub fn load_csv_file(
        &mut self,
        collection: &str,
        path: impl AsRef<Path>,
        strict: bool,
    ) -> Result<IngestReport> {
        let file = File::open(path)?;
        self.load_csv(collection, file, strict)
    }

    /// Loads `<Collection>.csv` files, greater collections first. Missing
    /// files are skipped.
    pub fn load_directory(&mut self, dir: impl AsRef<Path>, strict: bool) -> Result<Vec<IngestReport>> {
        let order: Vec<String> = self
            .db()?
            .schema()
            .topological_order()
            .into_iter()
            .map(String::from)
            .collect();
        let mut reports = Vec::new();
        for name in order {
            let path = dir.as_ref().join(format!("{name}.csv"));
            if path.is_file() {
                reports.push(self.load_csv_file(&name, &path, strict)?);
            }
        }
        Ok(reports)
    }

    pub fn products(&self) -> &BTreeMap<String, ProductCollection> {
        &self.products
    }

    /// Registers `name = (F1 a, F2 b | predicate)` for use in later queries.
    pub fn define_product(&mut self, name: &str, set: &SetExpr) -> Result<&ProductCollection> {
        let schema = self.db()?.schema();
        if schema.concept(name).is_some() {
            return Err(Error::DuplicateConcept(name.to_string()));
        }
        let plan = coql::resolve(
            &coql::ast::Query {
                anchor: coql::ast::Anchor::Set(set.clone()),
                steps: Vec::new(),
            },
            schema,
            &self.products,
        )?;
        let AnchorPlan::Product(p) = plan.anchor else {
            return Err(Error::InvalidQuery {
                at: set.pos(),
                message: "a product needs at least two factors".into(),
            });
        };
        let factors = p
            .factors()
            .iter()
            .map(|f| (f.alias.clone(), f.collection.clone()))
            .collect();
        let product = make_product(schema, name, factors, p.predicate().clone())?;
        self.products.insert(name.to_string(), product);
        Ok(&self.products[name])
    }

    pub fn prepare(&self, text: &str) -> Result<QueryPlan> {
        let query = coql::parse_query(text)?;
        coql::resolve(&query, self.db()?.schema(), &self.products)
    }

    pub fn explain(&self, text: &str) -> Result<String> {
        Ok(self.prepare(text)?.explain())
    }

    pub fn query(&self, text: &str) -> Result<ResultSet> {
        let plan = self.prepare(text)?;
        self.execute(&plan)
    }

    /// Runs one statement: a query or a product definition.
    pub fn run(&mut self, text: &str) -> Result<Outcome> {
        match coql::parse_statement(text)? {
            Statement::Define { name, set } => {
                self.define_product(&name.name, &set)?;
                Ok(Outcome::Defined(name.name))
            }
            Statement::Query(q) => {
                let plan = coql::resolve(&q, self.db()?.schema(), &self.products)?;
                Ok(Outcome::Rows(self.execute(&plan)?))
            }
        }
    }

    pub fn execute(&self, plan: &QueryPlan) -> Result<ResultSet> {
        let db = self.db()?;
        Ok(match execute(db, plan)? {
            Current::Set(s) => ResultSet::from_set(db, &s, plan.warnings.clone()),
            Current::Product(p) => ResultSet::from_product(db, &p, plan.warnings.clone()),
        })
    }

    /// The final element set of a plan, for plans that end in a collection
    /// or primitive domain.
    pub fn evaluate(&self, plan: &QueryPlan) -> Result<ElementSet> {
        match execute(self.db()?, plan)? {
            Current::Set(s) => Ok(s),
            Current::Product(p) => Err(Error::not_composable(format!(
                "the query ends in the product `{}`",
                p.name()
            ))),
        }
    }
}

fn filtered(db: &Database, set: ElementSet, filter: &Option<Filter>) -> Result<ElementSet> {
    let (Some(f), Some(coll)) = (filter, set.collection()) else {
        return Ok(set);
    };
    let kept: Vec<_> = set.elements().filter(|e| f.condition.eval(db, &[*e])).collect();
    ElementSet::from_elements(db, coll, kept)
}

fn elements(current: Current) -> Result<ElementSet> {
    match current {
        Current::Set(s) => Ok(s),
        Current::Product(p) => Err(Error::not_composable(format!("`{}` is a product", p.name()))),
    }
}

fn execute(db: &Database, plan: &QueryPlan) -> Result<Current> {
    let mut current = match &plan.anchor {
        AnchorPlan::Collection { collection, filter } => Current::Set(match filter {
            Some(f) => ElementSet::filter(db, collection, |e| f.condition.eval(db, &[e]))?,
            None => ElementSet::full(db, collection)?,
        }),
        AnchorPlan::Values { domain, values } => {
            Current::Set(ElementSet::values(domain.clone(), values.iter().cloned()))
        }
        AnchorPlan::Product(p) => Current::Product(p.members(db)?),
    };
    for op in &plan.ops {
        current = match op {
            Op::Project { path, filter } => {
                let set = project(db, &elements(current)?, path)?;
                Current::Set(filtered(db, set, filter)?)
            }
            Op::Deproject { path, target, filter } => {
                let set = deproject(db, &elements(current)?, path, target)?;
                Current::Set(filtered(db, set, filter)?)
            }
            Op::StarProject { paths, filter, .. } => {
                let set = project_union(db, &elements(current)?, paths)?;
                Current::Set(filtered(db, set, filter)?)
            }
            Op::StarDeproject {
                target,
                paths,
                filter,
            } => {
                let set = deproject_union(db, &elements(current)?, paths, target)?;
                Current::Set(filtered(db, set, filter)?)
            }
            Op::Infer {
                target, plan, filter, ..
            } => {
                let source = elements(current)?;
                let set = match plan {
                    InferPlan::Independent => ElementSet::full(db, target)?,
                    InferPlan::Routes(routes) => {
                        let mut out = ElementSet::empty(db, target)?;
                        for r in routes {
                            let down = deproject_union(db, &source, &r.down, &r.via)?;
                            out.union_with(&project_union(db, &down, &r.up)?);
                        }
                        out
                    }
                    InferPlan::Products(products) => {
                        let mut out = ElementSet::empty(db, target)?;
                        for p in products {
                            let members = product_star_deproject(db, &source, p)?;
                            out.union_with(&product_star_project(db, &members, target)?);
                        }
                        out
                    }
                };
                Current::Set(filtered(db, set, filter)?)
            }
            Op::ProductDeproject { product, alias } => {
                Current::Product(product_deproject(db, &elements(current)?, product, *alias)?)
            }
            Op::ProductStarDeproject(product) => {
                Current::Product(product_star_deproject(db, &elements(current)?, product)?)
            }
            Op::ProductProject { alias, .. } => match current {
                Current::Product(p) => Current::Set(product_project(db, &p, *alias)?),
                Current::Set(_) => unreachable!("resolver places alias hops after products"),
            },
            Op::ProductStarProject { target, filter } => match current {
                Current::Product(p) => {
                    Current::Set(filtered(db, product_star_project(db, &p, target)?, filter)?)
                }
                Current::Set(_) => unreachable!("resolver places product projections after products"),
            },
        };
    }
    Ok(current)
}
