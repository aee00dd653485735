//! Compiled boolean conditions over elements and product members.
//!
//! Conditions are produced by the query resolver (or built by hand) with
//! every name already bound, so evaluation never fails. Any comparison that
//! touches a NULL is false; `NOT` of it is true.

use std::cmp::Ordering;

use crate::model::{Database, Destination, Dimension, DimensionPath, ElementId, FieldValue};
use crate::value::{Decimal, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    fn holds(self, ord: Ordering) -> bool {
        match self {
            CmpOp::Eq => ord == Ordering::Equal,
            CmpOp::Ne => ord != Ordering::Equal,
            CmpOp::Lt => ord == Ordering::Less,
            CmpOp::Le => ord != Ordering::Greater,
            CmpOp::Gt => ord == Ordering::Greater,
            CmpOp::Ge => ord != Ordering::Less,
        }
    }
}

/// De-projection of one element into a lesser collection, used by
/// `COUNT(dim <- (Coll | filter))` and `SUM(...)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Aggregate {
    /// Dimension of the lesser collection pointing at the anchor element.
    pub dimension: Dimension,
    pub filter: Option<Box<Condition>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Operand {
    Null,
    Literal(Value),
    /// A path evaluated from the element bound to `alias` (0 for plain
    /// collections; factor index for products).
    Path {
        alias: usize,
        path: DimensionPath,
    },
    Count(Aggregate),
    Sum(Aggregate, DimensionPath),
}

impl Operand {
    pub fn path(alias: usize, path: DimensionPath) -> Self {
        Operand::Path { alias, path }
    }

    fn max_alias(&self) -> Option<usize> {
        match self {
            Operand::Path { alias, .. } => Some(*alias),
            Operand::Count(_) | Operand::Sum(..) => Some(0),
            Operand::Null | Operand::Literal(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Condition {
    True,
    Or(Vec<Condition>),
    And(Vec<Condition>),
    Not(Box<Condition>),
    Compare(Operand, CmpOp, Operand),
    /// A bare operand: true when non-NULL.
    Present(Operand),
}

/// The value an operand evaluates to.
#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Val<'a> {
    Null,
    Value(&'a Value),
    Owned(Value),
    Number(f64),
    Element(ElementId),
}

/// Hashable join key for equality pushdown in products.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) enum Key {
    Value(Value),
    Element(ElementId),
}

impl Val<'_> {
    /// Equal keys exactly when `compare(.., Eq, ..)` holds for values of the
    /// same kind.
    pub(crate) fn key(&self) -> Option<Key> {
        let normal = |v: &Value| match v {
            Value::Int(_) | Value::Dec(_) => Value::Dec(v.as_decimal().expect("numeric")),
            Value::Date(s) => Value::Str(s.clone()),
            Value::Str(_) => v.clone(),
        };
        match self {
            Val::Value(v) => Some(Key::Value(normal(v))),
            Val::Owned(v) => Some(Key::Value(normal(v))),
            Val::Element(e) => Some(Key::Element(*e)),
            Val::Null | Val::Number(_) => None,
        }
    }
}

impl Condition {
    pub fn compare(lhs: Operand, op: CmpOp, rhs: Operand) -> Self {
        Condition::Compare(lhs, op, rhs)
    }

    pub fn and(parts: Vec<Condition>) -> Self {
        Condition::And(parts)
    }

    /// Highest alias index this condition reads, `None` for constants.
    pub fn max_alias(&self) -> Option<usize> {
        match self {
            Condition::True => None,
            Condition::Or(parts) | Condition::And(parts) => {
                parts.iter().filter_map(Condition::max_alias).max()
            }
            Condition::Not(inner) => inner.max_alias(),
            Condition::Compare(a, _, b) => a.max_alias().max(b.max_alias()),
            Condition::Present(a) => a.max_alias(),
        }
    }

    /// All paths with their alias, for validation.
    pub fn paths(&self) -> Vec<(usize, &DimensionPath)> {
        let mut out = Vec::new();
        self.collect_paths(&mut out);
        out
    }

    fn collect_paths<'a>(&'a self, out: &mut Vec<(usize, &'a DimensionPath)>) {
        let operand = |o: &'a Operand, out: &mut Vec<(usize, &'a DimensionPath)>| {
            if let Operand::Path { alias, path } = o {
                out.push((*alias, path));
            }
        };
        match self {
            Condition::True => {}
            Condition::Or(parts) | Condition::And(parts) => parts.iter().for_each(|p| p.collect_paths(out)),
            Condition::Not(inner) => inner.collect_paths(out),
            Condition::Compare(a, _, b) => {
                operand(a, out);
                operand(b, out);
            }
            Condition::Present(a) => operand(a, out),
        }
    }

    /// Evaluates against one bound element per alias.
    pub fn eval(&self, db: &Database, binding: &[ElementId]) -> bool {
        match self {
            Condition::True => true,
            Condition::Or(parts) => parts.iter().any(|p| p.eval(db, binding)),
            Condition::And(parts) => parts.iter().all(|p| p.eval(db, binding)),
            Condition::Not(inner) => !inner.eval(db, binding),
            Condition::Compare(a, op, b) => compare(
                db,
                &eval_operand(db, a, binding),
                *op,
                &eval_operand(db, b, binding),
            ),
            Condition::Present(a) => eval_operand(db, a, binding) != Val::Null,
        }
    }

    /// Top-level conjuncts.
    pub(crate) fn conjuncts(&self) -> Vec<&Condition> {
        match self {
            Condition::And(parts) => parts.iter().flat_map(Condition::conjuncts).collect(),
            Condition::True => Vec::new(),
            other => vec![other],
        }
    }
}

pub(crate) fn eval_operand<'a>(db: &'a Database, op: &'a Operand, binding: &[ElementId]) -> Val<'a> {
    match op {
        Operand::Null => Val::Null,
        Operand::Literal(v) => Val::Value(v),
        Operand::Path { alias, path } => match db.follow(binding[*alias], path) {
            Ok(Some(FieldValue::Value(v))) => Val::Value(v),
            Ok(Some(FieldValue::Element(e))) => Val::Element(e),
            Ok(Some(FieldValue::Null)) | Ok(None) | Err(_) => Val::Null,
        },
        Operand::Count(agg) => Val::Owned(Value::Int(aggregate_members(db, agg, binding[0]).count() as i64)),
        Operand::Sum(agg, path) => {
            let values: Vec<&Value> = aggregate_members(db, agg, binding[0])
                .filter_map(|e| match db.follow(e, path) {
                    Ok(Some(FieldValue::Value(v))) => Some(v),
                    _ => None,
                })
                .collect();
            match sum_values(values.iter().copied()) {
                Some(total) => Val::Owned(Value::Dec(total)),
                None => Val::Number(values.iter().filter_map(|v| v.as_f64()).sum()),
            }
        }
    }
}

fn aggregate_members<'a>(
    db: &'a Database,
    agg: &'a Aggregate,
    anchor: ElementId,
) -> impl Iterator<Item = ElementId> + 'a {
    db.lessers_of(anchor, &agg.dimension)
        .unwrap_or_default()
        .into_iter()
        .filter(move |&e| agg.filter.as_ref().is_none_or(|f| f.eval(db, &[e])))
}

pub(crate) fn compare(db: &Database, a: &Val<'_>, op: CmpOp, b: &Val<'_>) -> bool {
    // elements compared with scalars stand for their single-field identity
    let lift = |e: &ElementId| -> Option<Value> {
        match db.identity(*e).values() {
            [only] => Some(only.clone()),
            _ => None,
        }
    };
    let ord = match (a, b) {
        (Val::Null, _) | (_, Val::Null) => return false,
        (Val::Element(x), Val::Element(y)) => {
            return match op {
                CmpOp::Eq => x == y,
                CmpOp::Ne => x != y,
                _ => false,
            }
        }
        (Val::Element(e), other) => return lift(e).is_some_and(|v| compare(db, &Val::Owned(v), op, other)),
        (other, Val::Element(e)) => return lift(e).is_some_and(|v| compare(db, other, op, &Val::Owned(v))),
        (Val::Number(x), other) => match other.as_f64().and_then(|y| x.partial_cmp(&y)) {
            Some(o) => o,
            None => return false,
        },
        (other, Val::Number(y)) => match other.as_f64().and_then(|x| x.partial_cmp(y)) {
            Some(o) => o,
            None => return false,
        },
        (x, y) => match (x.scalar(), y.scalar()) {
            (Some(x), Some(y)) => match x.compare(y) {
                Some(o) => o,
                None => return op == CmpOp::Ne,
            },
            _ => return false,
        },
    };
    op.holds(ord)
}

impl Val<'_> {
    fn scalar(&self) -> Option<&Value> {
        match self {
            Val::Value(v) => Some(v),
            Val::Owned(v) => Some(v),
            _ => None,
        }
    }

    fn as_f64(&self) -> Option<f64> {
        match self {
            Val::Number(x) => Some(*x),
            other => other.scalar().and_then(Value::as_f64),
        }
    }
}

/// Exact total of the numeric values; `None` on overflow.
pub(crate) fn sum_values<'a>(values: impl IntoIterator<Item = &'a Value>) -> Option<Decimal> {
    let mut total = Decimal::from(0);
    for v in values {
        if let Some(d) = v.as_decimal() {
            total = total.checked_add(&d)?;
        }
    }
    Some(total)
}

/// Whether a path ends in a numeric primitive.
pub fn is_numeric_path(path: &DimensionPath) -> bool {
    matches!(path.destination(), Destination::Primitive(t) if t.is_numeric())
}
