use std::fmt::Write as _;

use crate::algebra::{Factor, PrimitiveDomain, ProductCollection, PropagationPath, Segment};
use crate::model::DimensionPath;
use crate::predicate::Condition;
use crate::value::Value;

/// A compiled set-expression predicate and its source text.
#[derive(Clone, Debug, PartialEq)]
pub struct Filter {
    pub condition: Condition,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq)]
pub enum AnchorPlan {
    Collection {
        collection: String,
        filter: Option<Filter>,
    },
    Values {
        domain: PrimitiveDomain,
        values: Vec<Value>,
    },
    Product(ProductCollection),
}

/// One route of an inference: down from the source into `via`, then up to
/// the target. Rank-0 paths stand for "already there".
#[derive(Clone, Debug, PartialEq)]
pub struct Route {
    pub via: String,
    pub down: Vec<DimensionPath>,
    pub up: Vec<DimensionPath>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum InferPlan {
    Routes(Vec<Route>),
    /// Through registered products, when the collections have no common lesser.
    Products(Vec<ProductCollection>),
    Independent,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Op {
    Project {
        path: DimensionPath,
        filter: Option<Filter>,
    },
    /// `path` starts at `target` and ends in the current domain.
    Deproject {
        path: DimensionPath,
        target: String,
        filter: Option<Filter>,
    },
    StarProject {
        target: String,
        paths: Vec<DimensionPath>,
        filter: Option<Filter>,
    },
    StarDeproject {
        target: String,
        paths: Vec<DimensionPath>,
        filter: Option<Filter>,
    },
    Infer {
        source: String,
        target: String,
        plan: InferPlan,
        filter: Option<Filter>,
    },
    ProductDeproject {
        product: ProductCollection,
        alias: usize,
    },
    ProductStarDeproject(ProductCollection),
    ProductProject {
        alias: usize,
        factor: Factor,
    },
    ProductStarProject {
        target: String,
        filter: Option<Filter>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct QueryPlan {
    pub anchor: AnchorPlan,
    /// Printed form of the anchor.
    pub anchor_text: String,
    pub ops: Vec<Op>,
    pub warnings: Vec<String>,
}

fn label(collection: &str, filter: &Option<Filter>) -> String {
    match filter {
        Some(f) => format!("({collection} | {})", f.text),
        None => format!("({collection})"),
    }
}

/// Lines of a path walked upwards; a trailing primitive hop is glued to the
/// previous line.
fn up_lines(path: &DimensionPath, filter: &Option<Filter>, lines: &mut Vec<String>) {
    let n = path.segments().len();
    for (i, d) in path.segments().iter().enumerate() {
        let last = i + 1 == n;
        match d.destination_concept() {
            Some(c) => {
                let target = if last { label(c, filter) } else { format!("({c})") };
                lines.push(format!("-> {} -> {target}", d.name));
            }
            None => match lines.last_mut() {
                Some(prev) => write!(prev, " -> {}", d.name).unwrap(),
                None => lines.push(format!("-> {}", d.name)),
            },
        }
    }
}

/// Lines of a path walked downwards from its destination to its source.
fn down_lines(path: &DimensionPath, filter: &Option<Filter>, lines: &mut Vec<String>) {
    for (i, d) in path.segments().iter().enumerate().rev() {
        let target = if i == 0 {
            label(&d.source, filter)
        } else {
            format!("({})", d.source)
        };
        lines.push(format!("<- {} <- {target}", d.name));
    }
}

fn indent(block: Vec<String>, out: &mut Vec<String>) {
    out.extend(block.into_iter().map(|l| format!("    {l}")));
}

fn star_lines(
    arrow: &str,
    target: &str,
    paths: &[DimensionPath],
    filter: &Option<Filter>,
    down: bool,
    out: &mut Vec<String>,
) {
    let walk = |p: &DimensionPath, lines: &mut Vec<String>| {
        if down {
            down_lines(p, filter, lines)
        } else {
            up_lines(p, filter, lines)
        }
    };
    match paths {
        [only] if only.rank() > 0 => walk(only, out),
        _ => {
            out.push(format!("{arrow} {}", label(target, filter)));
            if paths.len() > 1 {
                for (i, p) in paths.iter().enumerate() {
                    out.push(format!("  // path {}", i + 1));
                    let mut block = Vec::new();
                    walk(p, &mut block);
                    indent(block, out);
                }
            }
        }
    }
}

fn propagation_lines(p: &PropagationPath, filter: &Option<Filter>, out: &mut Vec<String>) {
    let n = p.segments.len();
    for (i, seg) in p.segments.iter().enumerate() {
        let f = if i + 1 == n { filter } else { &None };
        match seg {
            Segment::Down(path) => down_lines(path, f, out),
            Segment::Up(path) => up_lines(path, f, out),
        }
    }
}

impl Route {
    fn propagation_paths(&self, source: &str, target: &str) -> Vec<PropagationPath> {
        let mut out = Vec::new();
        for down in &self.down {
            for up in &self.up {
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
}

/// Registered products print as `(Name)`; inline ones are named by their text.
pub(crate) fn product_text(p: &ProductCollection) -> String {
    if p.name().starts_with('(') {
        p.name().to_string()
    } else {
        format!("({})", p.name())
    }
}

impl QueryPlan {
    /// Every hop on its own line, as the query is carried out.
    pub fn explain(&self) -> String {
        let mut out = vec![self.anchor_text.clone()];
        for op in &self.ops {
            match op {
                Op::Project { path, filter } if path.rank() == 0 => {
                    out.push(format!("-> {}", label(path.source(), filter)))
                }
                Op::Project { path, filter } => up_lines(path, filter, &mut out),
                Op::Deproject { path, target, filter } => {
                    if path.rank() == 0 {
                        out.push(format!("<- {}", label(target, filter)));
                    } else {
                        down_lines(path, filter, &mut out)
                    }
                }
                Op::StarProject {
                    target,
                    paths,
                    filter,
                } => star_lines("*->", target, paths, filter, false, &mut out),
                Op::StarDeproject {
                    target,
                    paths,
                    filter,
                } => star_lines("<-*", target, paths, filter, true, &mut out),
                Op::Infer {
                    source,
                    target,
                    plan,
                    filter,
                } => match plan {
                    InferPlan::Independent => {
                        out.push(format!("<-*-> {}", label(target, filter)));
                        out.push(format!("// warning: {}", crate::algebra::INDEPENDENT_WARNING));
                    }
                    InferPlan::Products(products) => {
                        out.push(format!("<-*-> {}", label(target, filter)));
                        for p in products {
                            out.push(format!("  // via {}", product_text(p)));
                        }
                    }
                    InferPlan::Routes(routes) => {
                        let paths: Vec<PropagationPath> = routes
                            .iter()
                            .flat_map(|r| r.propagation_paths(source, target))
                            .collect();
                        match &paths[..] {
                            [only] if !only.segments.is_empty() => propagation_lines(only, filter, &mut out),
                            _ => {
                                out.push(format!("<-*-> {}", label(target, filter)));
                                if paths.len() > 1 {
                                    for (i, p) in paths.iter().enumerate() {
                                        out.push(format!("  // path {}", i + 1));
                                        let mut block = Vec::new();
                                        propagation_lines(p, filter, &mut block);
                                        indent(block, &mut out);
                                    }
                                }
                            }
                        }
                    }
                },
                Op::ProductDeproject { product, alias } => out.push(format!(
                    "<- {} <- {}",
                    product.factors()[*alias].alias,
                    product_text(product)
                )),
                Op::ProductStarDeproject(product) => out.push(format!("<-* {}", product_text(product))),
                Op::ProductProject { factor, .. } => {
                    out.push(format!("-> {} -> ({})", factor.alias, factor.collection))
                }
                Op::ProductStarProject { target, filter } => {
                    out.push(format!("*-> {}", label(target, filter)))
                }
            }
        }
        for w in &self.warnings {
            let line = format!("// warning: {w}");
            if !out.contains(&line) {
                out.push(line);
            }
        }
        out.join("\n")
    }
}
