//! Command-line and HTTP front end for `xcube-core`.

pub mod cli;
pub mod config;
pub mod http;
pub mod render;
