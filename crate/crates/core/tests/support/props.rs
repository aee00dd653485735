//! Seed-driven property checks shared by the proptest suites and the
//! acceptance harness. Each returns a description of the first violation.

use comdb::algebra::{
    deproject, infer, intersect_deprojections, make_product, project, star_deproject, star_project,
    ElementSet, Via,
};
use comdb::coql::parse_query;
use comdb::engine::{Engine, Format};
use comdb::model::{Destination, DimensionPath};
use comdb::predicate::Condition;
use comdb::value::Value;
use rand::seq::SliceRandom;
use rand::Rng;

use super::{items, random_db, rng, GenConfig, Item, Oracle, RandomDb, Rng8};

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

type Check = Result<(), String>;

fn union(a: &ElementSet, b: &ElementSet) -> ElementSet {
    let mut out = a.clone();
    out.union_with(b);
    out
}

fn subset_of(a: &ElementSet, b: &ElementSet) -> bool {
    items(a).is_subset(&items(b))
}

fn split(path: &DimensionPath, k: usize) -> (DimensionPath, DimensionPath) {
    let segs = path.segments();
    (
        DimensionPath::new(segs[..k].to_vec()).unwrap(),
        DimensionPath::new(segs[k..].to_vec()).unwrap(),
    )
}

/// A random subset of whatever `path` ends in: elements of a collection or
/// values of a primitive domain.
fn destination_subset(r: &RandomDb, rng: &mut Rng8, path: &DimensionPath, density: f64) -> ElementSet {
    match path.destination() {
        Destination::Concept(c) => r.subset(rng, &c, density),
        Destination::Primitive(_) => {
            let full = ElementSet::full(&r.db, path.source()).unwrap();
            let domain = project(&r.db, &full, path)
                .unwrap()
                .primitive_domain()
                .unwrap()
                .clone();
            let values: Vec<Value> = (0..10)
                .filter(|_| rng.gen_bool(density))
                .map(Value::Int)
                .collect();
            ElementSet::values(domain, values)
        }
    }
}

fn name(r: &RandomDb, i: usize) -> &str {
    &r.names[i]
}

pub fn monotonicity(seed: u64) -> Check {
    let r = random_db(seed, GenConfig::default());
    let db = &r.db;
    let mut g = rng(seed ^ 0x6d6f6e6f);
    let i = r.random_collection(&mut g);
    let s1 = r.subset(&mut g, name(&r, i), 0.3);
    let s2 = union(&s1, &r.subset(&mut g, name(&r, i), 0.3));
    let p = r.random_path(&mut g, i, 3, true);
    ensure!(
        subset_of(&project(db, &s1, &p).unwrap(), &project(db, &s2, &p).unwrap()),
        "project along {p} is not monotone"
    );
    let l = r.random_collection(&mut g);
    let q = r.random_path(&mut g, l, 3, true);
    let t1 = destination_subset(&r, &mut g, &q, 0.3);
    let t2 = union(&t1, &destination_subset(&r, &mut g, &q, 0.3));
    ensure!(
        subset_of(
            &deproject(db, &t1, &q, name(&r, l)).unwrap(),
            &deproject(db, &t2, &q, name(&r, l)).unwrap()
        ),
        "deproject along {q} is not monotone"
    );
    for t in 0..r.names.len() {
        let target = name(&r, t);
        if r.concept_leq(i, t) {
            let (a, b) = (
                star_project(db, &s1, target).unwrap(),
                star_project(db, &s2, target).unwrap(),
            );
            ensure!(subset_of(&a, &b), "*-> ({target}) is not monotone");
        }
        if r.concept_leq(t, i) {
            let (a, b) = (
                star_deproject(db, &s1, target).unwrap(),
                star_deproject(db, &s2, target).unwrap(),
            );
            ensure!(subset_of(&a, &b), "<-* ({target}) is not monotone");
        }
        let a = infer(db, &s1, target, None).unwrap().result;
        let b = infer(db, &s2, target, None).unwrap().result;
        ensure!(subset_of(&a, &b), "<-*-> ({target}) is not monotone");
    }
    Ok(())
}

pub fn union_distributivity(seed: u64) -> Check {
    let r = random_db(seed, GenConfig::default());
    let db = &r.db;
    let mut g = rng(seed ^ 0x756e696f);
    let i = r.random_collection(&mut g);
    let a = r.subset(&mut g, name(&r, i), 0.3);
    let b = r.subset(&mut g, name(&r, i), 0.3);
    let p = r.random_path(&mut g, i, 3, true);
    let whole = project(db, &union(&a, &b), &p).unwrap();
    let parts = union(&project(db, &a, &p).unwrap(), &project(db, &b, &p).unwrap());
    ensure!(
        items(&whole) == items(&parts),
        "project along {p} does not distribute over union"
    );
    let l = r.random_collection(&mut g);
    let q = r.random_path(&mut g, l, 3, true);
    let (c, d) = (
        destination_subset(&r, &mut g, &q, 0.3),
        destination_subset(&r, &mut g, &q, 0.3),
    );
    let target = name(&r, l);
    let whole = deproject(db, &union(&c, &d), &q, target).unwrap();
    let parts = union(
        &deproject(db, &c, &q, target).unwrap(),
        &deproject(db, &d, &q, target).unwrap(),
    );
    ensure!(
        items(&whole) == items(&parts),
        "deproject along {q} does not distribute over union"
    );
    Ok(())
}

pub fn path_composition(seed: u64) -> Check {
    let r = random_db(seed, GenConfig::default());
    let db = &r.db;
    let mut g = rng(seed ^ 0x70617468);
    for _ in 0..8 {
        let l = r.random_collection(&mut g);
        let p = r.random_path(&mut g, l, 4, true);
        if p.rank() < 2 {
            continue;
        }
        let k = g.gen_range(1..p.rank());
        let (head, tail) = split(&p, k);
        let s = r.subset(&mut g, name(&r, l), 0.5);
        let direct = project(db, &s, &p).unwrap();
        let stepwise = project(db, &project(db, &s, &head).unwrap(), &tail).unwrap();
        ensure!(
            items(&direct) == items(&stepwise),
            "project along {p} differs from {head} then {tail}"
        );
        let t = destination_subset(&r, &mut g, &p, 0.5);
        let direct = deproject(db, &t, &p, name(&r, l)).unwrap();
        let middle = deproject(db, &t, &tail, tail.source()).unwrap();
        let stepwise = deproject(db, &middle, &head, name(&r, l)).unwrap();
        ensure!(
            items(&direct) == items(&stepwise),
            "deproject along {p} differs from {tail} then {head}"
        );
    }
    Ok(())
}

pub fn adjoint_containments(seed: u64) -> Check {
    let cfg = GenConfig {
        nulls: false,
        ..GenConfig::default()
    };
    let r = random_db(seed, cfg);
    let db = &r.db;
    let mut g = rng(seed ^ 0x61646a6f);
    let l = r.random_collection(&mut g);
    let p = r.random_path(&mut g, l, 3, true);
    let source = name(&r, l);
    let s = r.subset(&mut g, source, 0.4);
    let back = deproject(db, &project(db, &s, &p).unwrap(), &p, source).unwrap();
    ensure!(subset_of(&s, &back), "S is not within deproject(project(S, {p}))");
    let t = destination_subset(&r, &mut g, &p, 0.4);
    let forth = project(db, &deproject(db, &t, &p, source).unwrap(), &p).unwrap();
    ensure!(
        subset_of(&forth, &t),
        "project(deproject(T, {p})) is not within T"
    );
    Ok(())
}

/// Source, target and the two factors of an unconstrained product where the
/// first factor lies only under the source and the second only under the
/// target.
fn neutral_setup(r: &RandomDb) -> Option<(usize, usize, usize, usize)> {
    let n = r.names.len();
    let nonempty = |c: usize| !r.db.collection(&r.names[c]).unwrap().is_empty();
    let mut found = Vec::new();
    for a in 0..n {
        for t in 0..n {
            for f1 in 0..n {
                for f2 in 0..n {
                    if f1 != f2
                        && nonempty(f1)
                        && nonempty(f2)
                        && r.concept_leq(f1, a)
                        && r.concept_leq(f2, t)
                        && !r.concept_leq(f1, t)
                        && !r.concept_leq(f2, a)
                    {
                        found.push((a, t, f1, f2));
                    }
                }
            }
        }
    }
    found.first().copied()
}

pub fn bottom_neutrality(seed: u64) -> Check {
    let mut g = rng(seed ^ 0x626f7474);
    let mut attempt = seed;
    for _ in 0..64 {
        let r = random_db(attempt, GenConfig::default());
        attempt = g.gen();
        let Some((a, t, f1, f2)) = neutral_setup(&r) else {
            continue;
        };
        let db = &r.db;
        let free = make_product(
            db.schema(),
            "Free",
            vec![
                ("x".into(), r.names[f1].clone()),
                ("y".into(), r.names[f2].clone()),
            ],
            Condition::True,
        )
        .unwrap();
        let expected = star_project(db, &ElementSet::full(db, &r.names[f2]).unwrap(), &r.names[t]).unwrap();
        let mut tried = 0;
        for _ in 0..8 {
            let s = r.subset(&mut g, &r.names[a], 0.5);
            if star_deproject(db, &s, &r.names[f1]).unwrap().is_empty() {
                continue;
            }
            tried += 1;
            let got = infer(db, &s, &r.names[t], Some(Via::Product(&free))).unwrap();
            ensure!(
                items(&got.result) == items(&expected),
                "inference {} -> {} through an unconstrained product depends on the source",
                r.names[a],
                r.names[t]
            );
        }
        if tried >= 2 {
            return Ok(());
        }
    }
    Err(format!(
        "seed {seed}: no database with two independent factors found"
    ))
}

pub fn infer_within_target(seed: u64) -> Check {
    let r = random_db(seed, GenConfig::default());
    let db = &r.db;
    let o = Oracle::new(&r);
    let mut g = rng(seed ^ 0x696e6665);
    let i = r.random_collection(&mut g);
    let s = r.subset(&mut g, name(&r, i), 0.4);
    let full_source = ElementSet::full(db, name(&r, i)).unwrap();
    for t in 0..r.names.len() {
        let target = name(&r, t);
        let got = infer(db, &s, target, None).unwrap();
        ensure!(
            got.result.collection() == Some(target),
            "infer into {target} left the target"
        );
        ensure!(
            subset_of(&got.result, &ElementSet::full(db, target).unwrap()),
            "infer into {target} is not within the target"
        );
        let lessers = o.common_lessers(i, t);
        let comparable = r.concept_leq(i, t) || r.concept_leq(t, i);
        if let [w] = lessers[..] {
            if !comparable {
                let via = infer(db, &s, target, Some(Via::Collection(name(&r, w)))).unwrap();
                ensure!(
                    items(&via.result) == items(&got.result),
                    "explicit via {} changes the result",
                    name(&r, w)
                );
            }
        }
        for &w in &lessers {
            let via = infer(db, &full_source, target, Some(Via::Collection(name(&r, w)))).unwrap();
            let down = star_deproject(db, &full_source, name(&r, w)).unwrap();
            let expected = star_project(db, &down, target).unwrap();
            ensure!(
                items(&via.result) == items(&expected),
                "full-source inference via {} differs",
                name(&r, w)
            );
        }
    }
    Ok(())
}

/// Every algebra operation agrees with the oracle on one random database.
pub fn oracle_equivalence(seed: u64) -> Check {
    let r = random_db(seed, GenConfig::default());
    let db = &r.db;
    let o = Oracle::new(&r);
    let mut g = rng(seed ^ 0x6f726163);
    let all: Vec<_> = o.up.keys().copied().collect();
    for _ in 0..50 {
        if let (Some(&a), Some(&b)) = (all.choose(&mut g), all.choose(&mut g)) {
            ensure!(
                db.less_or_equal(a, b) == o.leq(a, b),
                "leq({a:?}, {b:?}) disagrees"
            );
            ensure!(
                db.less_than(a, b) == (a != b && o.leq(a, b)),
                "less_than({a:?}, {b:?}) disagrees"
            );
        }
    }
    let n = r.names.len();
    for i in 0..n {
        let source = name(&r, i);
        let s = r.subset(&mut g, source, 0.4);
        let si = items(&s);
        let p = r.random_path(&mut g, i, 3, true);
        let got = items(&project(db, &s, &p).unwrap());
        ensure!(got == o.project(&si, &p), "project({source}, {p}) disagrees");
        for x in &got {
            ensure!(
                si.iter()
                    .any(|e| matches!(e, Item::Element(e) if o.follow(*e, &p).as_ref() == Some(x))),
                "project({source}, {p}) produced {x:?} without a lesser witness"
            );
        }
        let t = destination_subset(&r, &mut g, &p, 0.4);
        let got = items(&deproject(db, &t, &p, source).unwrap());
        ensure!(
            got == o.deproject(&items(&t), &p, source),
            "deproject(.., {p}, {source}) disagrees"
        );
        for t in 0..n {
            let target = name(&r, t);
            match star_project(db, &s, target) {
                Ok(set) => ensure!(
                    items(&set) == o.star_project(&si, target),
                    "*-> {source} to {target} disagrees"
                ),
                Err(_) => ensure!(!r.concept_leq(i, t), "*-> {source} to {target} failed"),
            }
            match star_deproject(db, &s, target) {
                Ok(set) => {
                    ensure!(
                        items(&set) == o.star_deproject(&si, target),
                        "<-* {source} to {target} disagrees"
                    )
                }
                Err(_) => ensure!(!r.concept_leq(t, i), "<-* {source} to {target} failed"),
            }
            let got = infer(db, &s, target, None).unwrap();
            let (expected, independent) = o.infer(&si, i, t);
            ensure!(
                items(&got.result) == expected,
                "infer {source} to {target} disagrees"
            );
            ensure!(
                got.warning.is_some() == independent,
                "independence of {source} and {target} disagrees"
            );
        }
    }
    let t = r.random_collection(&mut g);
    let above: Vec<usize> = (0..n).filter(|&c| r.concept_leq(t, c)).collect();
    let sources: Vec<ElementSet> = (0..2)
        .map(|_| {
            let c = *above.choose(&mut g).unwrap();
            r.subset(&mut g, name(&r, c), 0.6)
        })
        .collect();
    let got = intersect_deprojections(db, &sources, name(&r, t)).unwrap();
    let expected = o.intersect(&sources.iter().map(items).collect::<Vec<_>>(), name(&r, t));
    ensure!(
        items(&got) == expected,
        "intersect_deprojections into {} disagrees",
        name(&r, t)
    );
    Ok(())
}

/// A random chain query over the database and the same computation done
/// with direct algebra calls.
fn random_query(r: &RandomDb, g: &mut Rng8) -> (String, ElementSet) {
    let db = &r.db;
    let mut at = r.random_collection(g);
    let k = g.gen_range(0..10);
    let mut text = format!("({} | v < {k})", r.names[at]);
    let mut set = ElementSet::filter(
        db,
        &r.names[at],
        |e| matches!(db.field(e, "v").unwrap(), comdb::model::FieldValue::Value(Value::Int(v)) if *v < k),
    )
    .unwrap();
    let n = r.names.len();
    for _ in 0..g.gen_range(1..=3) {
        match g.gen_range(0..5) {
            0 => {
                let p = r.random_path(g, at, 2, true);
                for d in p.segments() {
                    text.push_str(&format!(" -> {}", d.name));
                }
                set = project(db, &set, &p).unwrap();
                match p.destination_concept() {
                    Some(c) => at = r.names.iter().position(|x| x == c).unwrap(),
                    None => break,
                }
            }
            1 => {
                let up: Vec<usize> = (0..n).filter(|&t| t != at && r.concept_leq(at, t)).collect();
                let Some(&t) = up.choose(g) else { continue };
                text.push_str(&format!(" *-> ({})", r.names[t]));
                set = star_project(db, &set, &r.names[t]).unwrap();
                at = t;
            }
            2 => {
                let down: Vec<usize> = (0..n).filter(|&t| t != at && r.concept_leq(t, at)).collect();
                let Some(&t) = down.choose(g) else { continue };
                text.push_str(&format!(" <-* ({})", r.names[t]));
                set = star_deproject(db, &set, &r.names[t]).unwrap();
                at = t;
            }
            3 => {
                let dims: Vec<(usize, &String)> = (0..n)
                    .flat_map(|l| {
                        r.refs[l]
                            .iter()
                            .filter(|(_, t)| *t == at)
                            .map(move |(d, _)| (l, d))
                    })
                    .collect();
                let Some(&(l, d)) = dims.choose(g) else { continue };
                text.push_str(&format!(" <- {d} <- ({})", r.names[l]));
                let path = db.schema().path(&r.names[l], &[d]).unwrap();
                set = deproject(db, &set, &path, &r.names[l]).unwrap();
                at = l;
            }
            _ => {
                let t = r.random_collection(g);
                text.push_str(&format!(" <-*-> ({})", r.names[t]));
                set = infer(db, &set, &r.names[t], None).unwrap().result;
                at = t;
            }
        }
    }
    (text, set)
}

pub fn execute_matches_algebra(seed: u64) -> Check {
    let r = random_db(seed, GenConfig::default());
    let mut g = rng(seed ^ 0x65786563);
    let (text, expected) = random_query(&r, &mut g);
    let engine = Engine::with_database(random_db(seed, GenConfig::default()).db);
    let plan = engine.prepare(&text).map_err(|e| format!("`{text}`: {e}"))?;
    let got = engine.evaluate(&plan).map_err(|e| format!("`{text}`: {e}"))?;
    ensure!(
        items(&got) == items(&expected),
        "`{text}` differs from the algebra"
    );
    let rows = engine.query(&text).unwrap();
    ensure!(
        rows.len() == expected.len(),
        "`{text}` renders {} rows, expected {}",
        rows.len(),
        expected.len()
    );
    Ok(())
}

pub fn determinism(seed: u64) -> Check {
    let r = random_db(seed, GenConfig::default());
    let mut g = rng(seed ^ 0x64657465);
    let (text, _) = random_query(&r, &mut g);
    let first = Engine::with_database(r.db);
    let second = Engine::with_database(random_db(seed, GenConfig::default()).db);
    ensure!(
        first.prepare(&text).unwrap() == second.prepare(&text).unwrap(),
        "`{text}` plans differ"
    );
    for format in [Format::Table, Format::Csv, Format::Json] {
        let a = first.query(&text).unwrap().render(format);
        ensure!(
            a == first.query(&text).unwrap().render(format),
            "`{text}` is not repeatable"
        );
        ensure!(
            a == second.query(&text).unwrap().render(format),
            "`{text}` differs across identical databases"
        );
    }
    ensure!(
        first.explain(&text).unwrap() == second.explain(&text).unwrap(),
        "`{text}` explains differ"
    );
    Ok(())
}

pub fn ast_round_trip(seed: u64) -> Check {
    let query = super::ast_gen::query(&mut rng(seed));
    let text = query.to_string();
    let parsed = parse_query(&text).map_err(|e| format!("`{text}` does not parse: {e}"))?;
    ensure!(parsed == query, "`{text}` parses to `{parsed}`");
    ensure!(parsed.to_string() == text, "`{text}` prints back as `{parsed}`");
    Ok(())
}

/// Arbitrary input yields a plan or a positioned error, never a panic.
pub fn fuzz_input(seed: u64) -> Check {
    let mut g = rng(seed);
    let len = g.gen_range(0..64);
    let bytes: Vec<u8> = if g.gen_bool(0.5) {
        (0..len).map(|_| g.gen()).collect()
    } else {
        const PIECES: &[&str] = &[
            "(",
            ")",
            "->",
            "<-",
            "*->",
            "<-*",
            "<-*->",
            "|",
            ",",
            ".",
            "'x'",
            "\"",
            "'",
            "1",
            "-2.5",
            "Books",
            "b",
            "COUNT",
            "SUM",
            "GIVEN",
            "GET",
            "WHERE",
            "AND",
            "OR",
            "NOT",
            "NULL",
            "==",
            "=",
            "<",
            ">=",
            "!=",
            " ",
            "\n",
            "//",
            ";",
            "Publishers",
            "price",
            "publisher",
        ];
        (0..len)
            .flat_map(|_| PIECES.choose(&mut g).unwrap().bytes())
            .collect()
    };
    let text = String::from_utf8_lossy(&bytes);
    let engine = fuzz_engine();
    let outcome = std::panic::catch_unwind(|| match engine.prepare(&text) {
        Ok(_) => Ok(()),
        Err(e) if e.is_query_error() => {
            if e.position().is_none() && matches!(e, comdb::Error::Lex { .. } | comdb::Error::Parse { .. }) {
                Err(format!("{text:?}: {e} has no position"))
            } else {
                Ok(())
            }
        }
        Err(e) => Err(format!("{text:?}: unstructured error {e}")),
    });
    outcome.map_err(|_| format!("{text:?} panicked"))?
}

fn fuzz_engine() -> Engine {
    thread_local! {
        static ENGINE: Engine = {
            let mut e = Engine::new();
            e.load_schema(
                "CONCEPT Addresses IDENTITY CHAR(8) id ENTITY CHAR(2) country
                 CONCEPT Publishers IDENTITY CHAR(8) name ENTITY Addresses address
                 CONCEPT Books IDENTITY CHAR(10) isbn ENTITY DECIMAL price NULL, Publishers publisher NULL",
            )
            .unwrap();
            e
        };
    }
    ENGINE.with(Engine::clone)
}
