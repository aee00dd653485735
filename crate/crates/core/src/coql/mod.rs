//! The COQL query language: lexer, parser, canonical printer, name
//! resolution and EXPLAIN.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod plan;
mod resolve;

pub use parser::{parse_query, parse_schema, parse_script, parse_statement, split_statements};
pub use plan::{AnchorPlan, Filter, InferPlan, Op, QueryPlan, Route};
pub use resolve::resolve;

use crate::error::Result;
use crate::model::{Concept, FieldSpec, FieldType};
use crate::value::PrimitiveType;

fn primitive(type_name: &str) -> Option<PrimitiveType> {
    let t = match type_name.to_ascii_uppercase().as_str() {
        "CHAR" | "VARCHAR" | "STRING" | "TEXT" => PrimitiveType::String,
        "INT" | "INTEGER" => PrimitiveType::Integer,
        "DECIMAL" | "NUMBER" | "NUMERIC" => PrimitiveType::Decimal,
        "DATE" => PrimitiveType::Date,
        _ => return None,
    };
    Some(t)
}

fn field(def: &ast::FieldDef) -> FieldSpec {
    let ty = match primitive(&def.type_name.name) {
        Some(ty) => FieldType::Primitive {
            ty,
            length: def.length,
        },
        None => FieldType::Reference(def.type_name.name.clone()),
    };
    FieldSpec {
        name: def.name.name.clone(),
        ty,
        nullable: def.nullable,
    }
}

/// Concept definitions of a DDL text. Built-in type names win over concept
/// names; any other type name declares a reference dimension.
pub fn concepts_from_ddl(text: &str) -> Result<Vec<Concept>> {
    Ok(parse_schema(text)?
        .iter()
        .map(|def| Concept {
            name: def.name.name.clone(),
            identity: def.identity.iter().map(field).collect(),
            entity: def.entity.iter().map(field).collect(),
        })
        .collect())
}
