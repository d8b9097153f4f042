//! Experiment harness around the polymer core: configuration files, a
//! deterministic replica scheduler, per-experiment statistics with built-in
//! checks, and persisted CSV/JSON results with a markdown report generator.

pub mod config;
pub mod error;
pub mod experiments;
pub mod report;
pub mod runner;
