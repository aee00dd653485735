//! Random query ASTs for round-trip testing.

use comdb::coql::ast::{
    AggFn, Aggregate, Anchor, Comparison, Conjunction, Factor, Hop, Ident, Literal, Loc, Negation, Predicate,
    Query, SetExpr, Step, Term,
};
use comdb::predicate::CmpOp;
use rand::seq::SliceRandom;
use rand::Rng;

use super::Rng8;

const KEYWORDS: &[&str] = &[
    "CONCEPT", "IDENTITY", "ENTITY", "GIVEN", "GET", "WHERE", "AND", "OR", "NOT", "COUNT", "SUM", "NULL",
];

fn ident(g: &mut Rng8) -> Ident {
    const FIRST: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_";
    const REST: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_0123456789";
    loop {
        let mut s = String::new();
        s.push(*FIRST.choose(g).unwrap() as char);
        for _ in 0..g.gen_range(0..6) {
            s.push(*REST.choose(g).unwrap() as char);
        }
        if !KEYWORDS.iter().any(|k| k.eq_ignore_ascii_case(&s)) {
            return Ident::new(s);
        }
    }
}

fn literal(g: &mut Rng8) -> Literal {
    match g.gen_range(0..3) {
        0 => {
            const CHARS: &[char] = &['a', 'Z', ' ', '\'', '"', '|', '(', ')', '-', '>', 'é', '7'];
            Literal::Str(
                (0..g.gen_range(0..6))
                    .map(|_| *CHARS.choose(g).unwrap())
                    .collect(),
            )
        }
        1 => {
            let mut n = g.gen_range(0..100_000i64).to_string();
            if g.gen_bool(0.3) {
                n.insert(0, '-');
            }
            if g.gen_bool(0.3) {
                n.push_str(&format!(".{}", g.gen_range(0..100)));
            }
            Literal::Number(n)
        }
        _ => Literal::Null,
    }
}

fn path(g: &mut Rng8) -> Vec<Ident> {
    (0..g.gen_range(1..=3)).map(|_| ident(g)).collect()
}

fn term(g: &mut Rng8, depth: u32) -> Term {
    match g.gen_range(0..if depth == 0 { 2 } else { 4 }) {
        0 => Term::Path(path(g)),
        1 => Term::Literal(literal(g), Loc::default()),
        2 => Term::Aggregate(Box::new(Aggregate {
            func: if g.gen_bool(0.5) { AggFn::Count } else { AggFn::Sum },
            dimension: ident(g),
            set: set_expr(g, depth - 1),
            path: g.gen_bool(0.5).then(|| path(g)),
            loc: Loc::default(),
        })),
        _ => Term::Group(Box::new(predicate(g, depth - 1)), Loc::default()),
    }
}

fn predicate(g: &mut Rng8, depth: u32) -> Predicate {
    const OPS: &[CmpOp] = &[CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge];
    Predicate(
        (0..g.gen_range(1..=2))
            .map(|_| {
                Conjunction(
                    (0..g.gen_range(1..=2))
                        .map(|_| Negation {
                            negated: g.gen_bool(0.2),
                            cmp: Comparison {
                                lhs: term(g, depth),
                                rhs: g.gen_bool(0.8).then(|| (*OPS.choose(g).unwrap(), term(g, depth))),
                            },
                        })
                        .collect(),
                )
            })
            .collect(),
    )
}

fn set_expr(g: &mut Rng8, depth: u32) -> SetExpr {
    let n = if g.gen_bool(0.25) { g.gen_range(2..=3) } else { 1 };
    SetExpr {
        factors: (0..n)
            .map(|_| Factor {
                collection: ident(g),
                alias: g.gen_bool(0.4).then(|| ident(g)),
            })
            .collect(),
        predicate: g.gen_bool(0.5).then(|| predicate(g, depth)),
        loc: Loc::default(),
    }
}

fn hop(g: &mut Rng8, depth: u32) -> Hop {
    match g.gen_range(0..3) {
        0 => Hop::Dim(ident(g)),
        1 => Hop::Set(set_expr(g, depth)),
        _ => Hop::DimSet(ident(g), set_expr(g, depth)),
    }
}

fn step(g: &mut Rng8, depth: u32) -> Step {
    let hops = |g: &mut Rng8| (0..g.gen_range(1..=3)).map(|_| hop(g, depth)).collect();
    match g.gen_range(0..5) {
        0 => Step::Project(hops(g)),
        1 => Step::Deproject(hops(g)),
        2 => Step::StarProject(set_expr(g, depth)),
        3 => Step::StarDeproject(set_expr(g, depth)),
        _ => Step::Infer(set_expr(g, depth)),
    }
}

/// `-> d` followed by `-> (C)` would print as the single hop `d -> (C)`.
/// Returns the direction of a step that ends in a bare dimension.
fn trailing_dim(step: &Step) -> Option<bool> {
    match step {
        Step::Project(h) if matches!(h.last(), Some(Hop::Dim(_))) => Some(true),
        Step::Deproject(h) if matches!(h.last(), Some(Hop::Dim(_))) => Some(false),
        _ => None,
    }
}

fn fix_adjacent(steps: &mut [Step]) {
    for i in 1..steps.len() {
        let Some(forward) = trailing_dim(&steps[i - 1]) else {
            continue;
        };
        match (&mut steps[i], forward) {
            (Step::Project(h), true) | (Step::Deproject(h), false) => {
                if let Some(Hop::Set(_)) = h.first() {
                    h.insert(0, Hop::Dim(Ident::new("x")));
                }
            }
            _ => {}
        }
    }
}

pub fn query(g: &mut Rng8) -> Query {
    let depth = g.gen_range(0..=2);
    let anchor = if g.gen_bool(0.8) {
        Anchor::Set(set_expr(g, depth))
    } else {
        Anchor::Literals(
            (0..g.gen_range(1..=3)).map(|_| literal(g)).collect(),
            Loc::default(),
        )
    };
    let mut steps: Vec<Step> = (0..g.gen_range(0..=4)).map(|_| step(g, depth)).collect();
    fix_adjacent(&mut steps);
    Query { anchor, steps }
}
