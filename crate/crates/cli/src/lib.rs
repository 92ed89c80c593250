//! Configuration parsing and report emission for the `heterosim` binary.

pub mod config;
pub mod report;
