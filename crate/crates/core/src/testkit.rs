//! Small hand-built databases for unit tests.

use crate::algebra::ElementSet;
use crate::model::{build_schema, Concept, Database, FieldSpec, FieldValue};
use crate::value::PrimitiveType::{Decimal, Integer, String as Text};

fn key(name: &str) -> FieldSpec {
    FieldSpec::primitive(name, Text)
}

fn load(concepts: Vec<Concept>, rows: &[(&str, &[&str])]) -> Database {
    let mut db = Database::new(build_schema(concepts).unwrap());
    for (coll, cells) in rows {
        db.insert_text(coll, cells).unwrap();
    }
    db
}

/// X = colors, Y = prices, Z = products placed at (color, price).
/// z3 and z4 are constructed: green and blue are both high.
pub(crate) fn points() -> Database {
    load(
        vec![
            Concept::new("X").identity(key("name")),
            Concept::new("Y").identity(key("name")),
            Concept::new("Z")
                .identity(key("id"))
                .entity(FieldSpec::reference("color", "X"))
                .entity(FieldSpec::reference("price", "Y")),
        ],
        &[
            ("X", &["red"]),
            ("X", &["green"]),
            ("X", &["blue"]),
            ("Y", &["low"]),
            ("Y", &["mid"]),
            ("Y", &["high"]),
            ("Z", &["z1", "red", "low"]),
            ("Z", &["z2", "red", "mid"]),
            ("Z", &["z3", "green", "high"]),
            ("Z", &["z4", "blue", "high"]),
        ],
    )
}

pub(crate) fn books_schema() -> Vec<Concept> {
    vec![
        Concept::new("Books")
            .identity(key("isbn"))
            .entity(key("title"))
            .entity(FieldSpec::primitive("price", Decimal).nullable())
            .entity(FieldSpec::reference("publisher", "Publishers").nullable()),
        Concept::new("Publishers")
            .identity(key("name"))
            .entity(FieldSpec::reference("address", "Addresses")),
        Concept::new("Addresses")
            .identity(key("id"))
            .entity(key("country")),
    ]
}

/// Books, Publishers, Addresses. Cheap books (< 10) are b1 (p1, DE) and
/// b3 (p2, FR); b5 has no publisher, b4 no price.
pub(crate) fn books() -> Database {
    load(
        books_schema(),
        &[
            ("Addresses", &["a1", "DE"]),
            ("Addresses", &["a2", "FR"]),
            ("Addresses", &["a3", "DE"]),
            ("Publishers", &["p1", "a1"]),
            ("Publishers", &["p2", "a2"]),
            ("Publishers", &["XYZ", "a3"]),
            ("Books", &["b1", "Alpha", "5", "p1"]),
            ("Books", &["b2", "Beta", "50", "p1"]),
            ("Books", &["b3", "Gamma", "8", "p2"]),
            ("Books", &["b4", "Delta", "", "XYZ"]),
            ("Books", &["b5", "Epsilon", "3", ""]),
        ],
    )
}

fn writers(with_address: bool) -> Concept {
    let c = Concept::new("Writers")
        .identity(key("name"))
        .entity(FieldSpec::primitive("age", Integer));
    if with_address {
        c.entity(FieldSpec::reference("address", "Addresses"))
    } else {
        c
    }
}

fn writer_books() -> Concept {
    Concept::new("WriterBooks")
        .identity(key("id"))
        .entity(FieldSpec::reference("writer", "Writers"))
        .entity(FieldSpec::reference("book", "Books"))
}

fn publishing_schema(with_writer_address: bool) -> Vec<Concept> {
    vec![
        writers(with_writer_address),
        Concept::new("Books")
            .identity(key("isbn"))
            .entity(FieldSpec::reference("publisher", "Publishers")),
        Concept::new("Publishers")
            .identity(key("name"))
            .entity(FieldSpec::reference("address", "Addresses")),
        Concept::new("Addresses")
            .identity(key("id"))
            .entity(key("countries")),
        writer_books(),
    ]
}

/// Writers and Books related through WriterBooks; books published at
/// addresses. Young writers: w1 (DE publisher), w3 (FR publisher).
pub(crate) fn publishing() -> Database {
    load(
        publishing_schema(false),
        &[
            ("Addresses", &["a1", "DE"]),
            ("Addresses", &["a2", "FR"]),
            ("Addresses", &["a3", "US"]),
            ("Publishers", &["p1", "a1"]),
            ("Publishers", &["p2", "a2"]),
            ("Publishers", &["p3", "a3"]),
            ("Books", &["b1", "p1"]),
            ("Books", &["b2", "p2"]),
            ("Books", &["b3", "p3"]),
            ("Writers", &["w1", "25"]),
            ("Writers", &["w2", "45"]),
            ("Writers", &["w3", "29"]),
            ("WriterBooks", &["wb1", "w1", "b1"]),
            ("WriterBooks", &["wb2", "w2", "b3"]),
            ("WriterBooks", &["wb3", "w3", "b2"]),
            ("WriterBooks", &["wb4", "w2", "b1"]),
        ],
    )
}

/// The publishing fixture plus a home address for every writer: w1 lives at a2 (FR),
/// w2 at a1 (DE), w3 at a3 (US).
pub(crate) fn two_paths() -> Database {
    load(
        publishing_schema(true),
        &[
            ("Addresses", &["a1", "DE"]),
            ("Addresses", &["a2", "FR"]),
            ("Addresses", &["a3", "US"]),
            ("Publishers", &["p1", "a1"]),
            ("Publishers", &["p2", "a2"]),
            ("Books", &["b1", "p1"]),
            ("Books", &["b2", "p2"]),
            ("Writers", &["w1", "25", "a2"]),
            ("Writers", &["w2", "45", "a1"]),
            ("Writers", &["w3", "29", "a3"]),
            ("WriterBooks", &["wb1", "w1", "b1"]),
            ("WriterBooks", &["wb2", "w3", "b2"]),
        ],
    )
}

/// The publishing fixture plus Residences, a second dependency between
/// Writers and Addresses: w3 lives at a1 (DE), w1 at a3 (US).
pub(crate) fn residences() -> Database {
    let mut concepts = publishing_schema(false);
    concepts.push(
        Concept::new("Residences")
            .identity(key("id"))
            .entity(FieldSpec::reference("writer", "Writers"))
            .entity(FieldSpec::reference("address", "Addresses")),
    );
    let mut db = Database::new(build_schema(concepts).unwrap());
    let base = publishing();
    for coll in base.schema().topological_order() {
        for e in base.elements(coll).unwrap() {
            let mut cells = vec![base.identity(e).to_string()];
            for f in &base.schema().concept(coll).unwrap().entity {
                cells.push(match base.field(e, &f.name).unwrap() {
                    FieldValue::Value(v) => v.to_string(),
                    FieldValue::Element(g) => base.identity(g).to_string(),
                    FieldValue::Null => String::new(),
                });
            }
            let cells: Vec<&str> = cells.iter().map(String::as_str).collect();
            db.insert_text(coll, &cells).unwrap();
        }
    }
    db.insert_text("Residences", &["r1", "w3", "a1"]).unwrap();
    db.insert_text("Residences", &["r2", "w1", "a3"]).unwrap();
    db
}

pub(crate) fn shops_schema() -> Vec<Concept> {
    vec![
        writers(false),
        Concept::new("Books").identity(key("isbn")),
        Concept::new("Shops").identity(key("name")),
        writer_books(),
        Concept::new("Sellers")
            .identity(key("id"))
            .entity(FieldSpec::reference("book", "Books"))
            .entity(FieldSpec::reference("shop", "Shops")),
    ]
}

/// Ten elements: w1 (25) wrote b1 sold in s1; w2 (40) wrote b2 sold in s2.
pub(crate) fn shops() -> Database {
    load(
        shops_schema(),
        &[
            ("Writers", &["w1", "25"]),
            ("Writers", &["w2", "40"]),
            ("Books", &["b1"]),
            ("Books", &["b2"]),
            ("Shops", &["s1"]),
            ("Shops", &["s2"]),
            ("WriterBooks", &["wb1", "w1", "b1"]),
            ("WriterBooks", &["wb2", "w2", "b2"]),
            ("Sellers", &["se1", "b1", "s1"]),
            ("Sellers", &["se2", "b2", "s2"]),
        ],
    )
}

pub(crate) fn set(db: &Database, coll: &str, keys: &[&str]) -> ElementSet {
    ElementSet::from_keys(db, coll, keys.iter().copied()).unwrap()
}

pub(crate) fn keys(db: &Database, set: &ElementSet) -> Vec<String> {
    set.keys(db)
}
