//! Experiment harness, table formats and command-line front end for
//! [`tanaka_core`].

pub mod app;
pub mod config;
pub mod experiments;
pub mod output;
pub mod records;
