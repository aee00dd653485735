use std::fmt::Write as _;

use crate::algebra::{ElementSet, ProductSet};
use crate::model::{Database, FieldValue};
use crate::value::{Decimal, IdentityTuple, Value};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Cell {
    Null,
    Value(Value),
    /// A greater element, by its encoded identity.
    Ref(String),
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Null => String::new(),
            Cell::Value(v) => v.to_string(),
            Cell::Ref(id) => id.clone(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Null => serde_json::Value::Null,
            Cell::Value(Value::Int(i)) => (*i).into(),
            // exact decimals stay numbers unless f64 would change them
            Cell::Value(Value::Dec(d)) => match serde_json::from_str::<serde_json::Number>(d.as_str()) {
                Ok(n) if Decimal::parse(&n.to_string()).as_ref() == Some(d) => n.into(),
                _ => d.as_str().into(),
            },
            Cell::Value(v) => v.to_string().into(),
            Cell::Ref(id) => id.clone().into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Row {
    pub identity: String,
    pub cells: Vec<Cell>,
}

/// A query result: rows in identity order, plus any warnings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResultSet {
    /// `(Collection)`, `Concept.field` or the product text.
    pub domain: String,
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Table,
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "table" => Ok(Format::Table),
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}`; expected table, csv or json")),
        }
    }
}

fn cell(db: &Database, value: FieldValue<'_>) -> Cell {
    match value {
        FieldValue::Null => Cell::Null,
        FieldValue::Value(v) => Cell::Value(v.clone()),
        FieldValue::Element(e) => Cell::Ref(db.identity(e).to_string()),
    }
}

impl ResultSet {
    pub(crate) fn from_set(db: &Database, set: &ElementSet, warnings: Vec<String>) -> Self {
        match set.collection() {
            Some(name) => {
                let concept = db.schema().concept(name).expect("set of a known collection");
                let columns: Vec<String> = concept.fields().map(|f| f.name.clone()).collect();
                let mut elements: Vec<_> = set.elements().collect();
                elements.sort_by(|a, b| db.identity(*a).cmp(db.identity(*b)));
                let rows = elements
                    .into_iter()
                    .map(|e| Row {
                        identity: db.identity(e).to_string(),
                        cells: columns
                            .iter()
                            .map(|c| cell(db, db.field(e, c).expect("field of the concept")))
                            .collect(),
                    })
                    .collect();
                ResultSet {
                    domain: format!("({name})"),
                    columns,
                    rows,
                    warnings,
                }
            }
            None => {
                let domain = set.primitive_domain().expect("primitive set");
                ResultSet {
                    domain: domain.to_string(),
                    columns: vec![domain.field.clone()],
                    rows: set
                        .value_iter()
                        .map(|v| Row {
                            identity: v.to_string(),
                            cells: vec![Cell::Value(v.clone())],
                        })
                        .collect(),
                    warnings,
                }
            }
        }
    }

    pub(crate) fn from_product(db: &Database, set: &ProductSet, warnings: Vec<String>) -> Self {
        let mut rows: Vec<(Vec<&IdentityTuple>, Row)> = set
            .members()
            .iter()
            .map(|m| {
                let ids: Vec<&IdentityTuple> = m.iter().map(|e| db.identity(*e)).collect();
                let cells: Vec<Cell> = ids.iter().map(|id| Cell::Ref(id.to_string())).collect();
                let identity = IdentityTuple(ids.iter().map(|id| Value::Str(id.to_string())).collect());
                let row = Row {
                    identity: identity.to_string(),
                    cells,
                };
                (ids, row)
            })
            .collect();
        rows.sort_by(|a, b| a.0.cmp(&b.0));
        ResultSet {
            domain: set.name().to_string(),
            columns: set.factors().iter().map(|f| f.alias.clone()).collect(),
            rows: rows.into_iter().map(|(_, r)| r).collect(),
            warnings,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Row identities in order.
    pub fn identities(&self) -> Vec<&str> {
        self.rows.iter().map(|r| r.identity.as_str()).collect()
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Table => self.table(),
            Format::Csv => self.csv(),
            Format::Json => self.json_lines(),
        }
    }

    fn table(&self) -> String {
        let texts: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| r.cells.iter().map(Cell::text).collect())
            .collect();
        let widths: Vec<usize> = self
            .columns
            .iter()
            .enumerate()
            .map(|(i, c)| {
                texts
                    .iter()
                    .map(|r| r[i].chars().count())
                    .chain([c.chars().count()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |cells: &[String]| {
            let padded: Vec<String> = cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect();
            padded.join(" | ").trim_end().to_string()
        };
        let mut out = String::new();
        writeln!(out, "{}", line(&self.columns)).unwrap();
        let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
        writeln!(out, "{}", rule.join("-+-")).unwrap();
        for r in &texts {
            writeln!(out, "{}", line(r)).unwrap();
        }
        let n = self.rows.len();
        writeln!(out, "({n} {})", if n == 1 { "row" } else { "rows" }).unwrap();
        out
    }

    fn csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r.cells.iter().map(Cell::text))
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }

    fn json_lines(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            let mut obj = serde_json::Map::new();
            obj.insert("_identity".into(), r.identity.clone().into());
            for (c, v) in self.columns.iter().zip(&r.cells) {
                obj.insert(c.clone(), v.json());
            }
            writeln!(out, "{}", serde_json::Value::Object(obj)).unwrap();
        }
        out
    }
}
