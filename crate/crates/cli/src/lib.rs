//! Library surface of the experiment runner.
//!
//! The binary in `main.rs` is a thin argument-parsing shell over these
//! modules; integration tests drive the same code paths directly.

pub mod config;
pub mod csv;
pub mod report;
pub mod runner;
