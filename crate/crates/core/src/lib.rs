pub mod algebra;
pub mod coql;
pub mod engine;
pub mod error;
pub mod model;
pub mod predicate;
pub mod value;

pub use error::{Error, Position, Result};

#[cfg(test)]
mod testkit;
