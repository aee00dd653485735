use std::io::Read;

use crate::error::{Error, Result};
use crate::model::Database;

/// Outcome of loading one CSV file.
#[derive(Debug, Default)]
pub struct IngestReport {
    pub collection: String,
    pub inserted: usize,
    /// Rejected rows by file line, with the reason.
    pub rejected: Vec<(u64, Error)>,
}

/// Reads CSV rows into `db`. The header must name every field of the
/// concept exactly once, in any order. In strict mode the first bad row
/// aborts the load.
pub(crate) fn load_rows(
    db: &mut Database,
    collection: &str,
    input: impl Read,
    strict: bool,
) -> Result<IngestReport> {
    let concept = db
        .schema()
        .concept(collection)
        .ok_or_else(|| Error::unknown_collection(collection))?
        .clone();
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = reader.headers()?.clone();
    let fields: Vec<&str> = concept.fields().map(|f| f.name.as_str()).collect();
    let mismatch = |detail: String| Error::HeaderMismatch {
        collection: collection.to_string(),
        detail,
    };
    let mut order = Vec::with_capacity(fields.len());
    for f in &fields {
        let hits: Vec<usize> = header
            .iter()
            .enumerate()
            .filter(|(_, h)| h.trim() == *f)
            .map(|(i, _)| i)
            .collect();
        match hits[..] {
            [i] => order.push(i),
            [] => return Err(mismatch(format!("missing column `{f}`"))),
            _ => return Err(mismatch(format!("column `{f}` appears more than once"))),
        }
    }
    if let Some(extra) = header.iter().find(|h| !fields.contains(&h.trim())) {
        return Err(mismatch(format!("unexpected column `{extra}`")));
    }
    let mut report = IngestReport {
        collection: collection.to_string(),
        ..IngestReport::default()
    };
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let cells: Vec<&str> = order.iter().map(|&i| record.get(i).unwrap_or("")).collect();
        match db.insert_text(collection, &cells) {
            Ok(_) => report.inserted += 1,
            Err(e) if strict => {
                return Err(Error::RowRejected {
                    collection: collection.to_string(),
                    line,
                    source: Box::new(e),
                })
            }
            Err(e) => report.rejected.push((line, e)),
        }
    }
    Ok(report)
}
