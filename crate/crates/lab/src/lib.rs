//! Command-line harness around `composed-core`.
//!
//! Owns everything that touches the outside world: argument parsing, reading
//! staircase and config files, writing JSON/CSV/JSONL outputs with a
//! `manifest.json` beside them, and fanning replicate runs out over threads.

pub mod cli;
pub mod commands;
pub mod failure;
pub mod io;
pub mod parallel;

pub use failure::Failure;
