//! Concepts, schema, collections and elements.
//!
//! A database participates in two structures at once: every element is a
//! member of exactly one collection, and elements are partially ordered by
//! their references (an element is immediately less than each element it
//! references). The schema carries the same order one level up, between
//! concepts.

mod database;
mod schema;

pub use database::{Collection, Database, ElementId, FieldValue};
pub use schema::{
    build_schema, Concept, Destination, Dimension, DimensionPath, FieldLoc, FieldSpec, FieldType, Schema,
};
