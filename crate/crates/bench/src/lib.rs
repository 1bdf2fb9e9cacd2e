//! Experiment runner and command-line interface.

pub mod cli;
pub mod config;
pub mod figures;
pub mod runner;
