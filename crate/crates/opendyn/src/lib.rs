//! Command-line front end for `opendyn-core`: scenario files, trajectory
//! CSV output and the run loop.

pub mod cli;
pub mod config;
pub mod run;
pub mod trajectory;
