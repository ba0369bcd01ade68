//! Keyword search over heterogeneous XML collections, with context and
//! connection summaries, complete-result materialization and star-schema
//! generation.

pub mod connections;
pub mod contexts;
pub mod cube;
pub mod dataguide;
pub mod dewey;
pub mod error;
pub mod fixtures;
pub mod graph;
pub mod index;
pub mod materialize;
pub mod par;
pub mod path;
pub mod query;
pub mod session;
pub mod store;
pub mod text;
pub mod topk;

pub use error::{Error, Result};
