use std::fmt;

use crate::error::Position;
use crate::predicate::CmpOp;

/// A source position that never takes part in equality, so ASTs compare
/// structurally.
#[derive(Clone, Copy, Debug, Default)]
pub struct Loc(pub Position);

impl PartialEq for Loc {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ident {
    pub name: String,
    pub loc: Loc,
}

impl Ident {
    pub fn new(name: impl Into<String>) -> Self {
        Ident {
            name: name.into(),
            loc: Loc::default(),
        }
    }

    pub fn pos(&self) -> Position {
        self.loc.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Query {
    pub anchor: Anchor,
    pub steps: Vec<Step>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Anchor {
    Set(SetExpr),
    Literals(Vec<Literal>, Loc),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SetExpr {
    pub factors: Vec<Factor>,
    pub predicate: Option<Predicate>,
    pub loc: Loc,
}

impl SetExpr {
    pub fn collection(name: &str) -> Self {
        SetExpr {
            factors: vec![Factor {
                collection: Ident::new(name),
                alias: None,
            }],
            predicate: None,
            loc: Loc::default(),
        }
    }

    pub fn pos(&self) -> Position {
        self.loc.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Factor {
    pub collection: Ident,
    pub alias: Option<Ident>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Step {
    Project(Vec<Hop>),
    Deproject(Vec<Hop>),
    StarProject(SetExpr),
    StarDeproject(SetExpr),
    Infer(SetExpr),
}

/// One hop of an arrow step. The arrow of `DimSet` matches its step.
#[derive(Clone, Debug, PartialEq)]
pub enum Hop {
    Dim(Ident),
    Set(SetExpr),
    DimSet(Ident, SetExpr),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Literal {
    Str(String),
    Number(String),
    Null,
}

/// Disjunction of conjunctions.
#[derive(Clone, Debug, PartialEq)]
pub struct Predicate(pub Vec<Conjunction>);

#[derive(Clone, Debug, PartialEq)]
pub struct Conjunction(pub Vec<Negation>);

#[derive(Clone, Debug, PartialEq)]
pub struct Negation {
    pub negated: bool,
    pub cmp: Comparison,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub lhs: Term,
    pub rhs: Option<(CmpOp, Term)>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Term {
    Path(Vec<Ident>),
    Literal(Literal, Loc),
    Aggregate(Box<Aggregate>),
    Group(Box<Predicate>, Loc),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AggFn {
    Count,
    Sum,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Aggregate {
    pub func: AggFn,
    pub dimension: Ident,
    pub set: SetExpr,
    pub path: Option<Vec<Ident>>,
    pub loc: Loc,
}

/// A top-level script statement.
#[derive(Clone, Debug, PartialEq)]
pub enum Statement {
    Query(Query),
    /// `Name = (F1 a, F2 b | predicate)`
    Define {
        name: Ident,
        set: SetExpr,
    },
}

/// One concept of a DDL text.
#[derive(Clone, Debug, PartialEq)]
pub struct ConceptDef {
    pub name: Ident,
    pub identity: Vec<FieldDef>,
    pub entity: Vec<FieldDef>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldDef {
    pub type_name: Ident,
    pub length: Option<u32>,
    pub name: Ident,
    pub nullable: bool,
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.anchor {
            Anchor::Set(s) => write!(f, "{s}")?,
            Anchor::Literals(lits, _) => {
                for (i, l) in lits.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{l}")?;
                }
            }
        }
        for step in &self.steps {
            write!(f, " {step}")?;
        }
        Ok(())
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let hops = |f: &mut fmt::Formatter<'_>, arrow: &str, hops: &[Hop]| {
            f.write_str(arrow)?;
            for hop in hops {
                match hop {
                    Hop::Dim(d) => write!(f, " {}", d.name)?,
                    Hop::Set(s) => write!(f, " {s}")?,
                    Hop::DimSet(d, s) => write!(f, " {} {arrow} {s}", d.name)?,
                }
            }
            Ok(())
        };
        match self {
            Step::Project(h) => hops(f, "->", h),
            Step::Deproject(h) => hops(f, "<-", h),
            Step::StarProject(s) => write!(f, "*-> {s}"),
            Step::StarDeproject(s) => write!(f, "<-* {s}"),
            Step::Infer(s) => write!(f, "<-*-> {s}"),
        }
    }
}

impl fmt::Display for SetExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, factor) in self.factors.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str(&factor.collection.name)?;
            if let Some(a) = &factor.alias {
                write!(f, " {}", a.name)?;
            }
        }
        if let Some(p) = &self.predicate {
            write!(f, " | {p}")?;
        }
        f.write_str(")")
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Str(s) => write!(f, "'{}'", s.replace('\'', "''")),
            Literal::Number(n) => f.write_str(n),
            Literal::Null => f.write_str("NULL"),
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" OR ")?;
            }
            for (j, n) in c.0.iter().enumerate() {
                if j > 0 {
                    f.write_str(" AND ")?;
                }
                if n.negated {
                    f.write_str("NOT ")?;
                }
                write!(f, "{}", n.cmp.lhs)?;
                if let Some((op, rhs)) = &n.cmp.rhs {
                    write!(f, " {} {rhs}", op.symbol())?;
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Path(p) => write_path(f, p),
            Term::Literal(l, _) => write!(f, "{l}"),
            Term::Aggregate(a) => {
                let func = match a.func {
                    AggFn::Count => "COUNT",
                    AggFn::Sum => "SUM",
                };
                write!(f, "{func}({} <- {}", a.dimension.name, a.set)?;
                if let Some(p) = &a.path {
                    f.write_str(", ")?;
                    write_path(f, p)?;
                }
                f.write_str(")")
            }
            Term::Group(p, _) => write!(f, "({p})"),
        }
    }
}

fn write_path(f: &mut fmt::Formatter<'_>, path: &[Ident]) -> fmt::Result {
    for (i, seg) in path.iter().enumerate() {
        if i > 0 {
            f.write_str(".")?;
        }
        f.write_str(&seg.name)?;
    }
    Ok(())
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statement::Query(q) => write!(f, "{q}"),
            Statement::Define { name, set } => write!(f, "{} = {set}", name.name),
        }
    }
}
