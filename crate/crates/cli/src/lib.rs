//! Orchestration for the `dynpsn` command: configuration, stage execution
//! over a shared output directory, run metadata and report emission.

pub mod artifacts;
pub mod cli;
pub mod config;
pub mod oracle;
pub mod report;
pub mod stages;
pub mod svg;

use std::fmt;

pub use config::{Overrides, RunConfig};

/// Bad user input: unreadable config, missing or malformed input files.
#[derive(Debug)]
pub struct InputError(pub String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

/// An upstream stage has not run, or its outputs no longer match what it
/// recorded.
#[derive(Debug)]
pub struct DependencyError {
    pub stage: String,
    pub reason: String,
}

impl fmt::Display for DependencyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}; run `dynpsn {}` first", self.reason, self.stage)
    }
}

impl std::error::Error for DependencyError {}

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_DEPENDENCY: i32 = 3;

/// Process exit status for an error chain.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.is::<DependencyError>() {
            return EXIT_DEPENDENCY;
        }
        if cause.is::<InputError>() {
            return EXIT_INPUT;
        }
        if let Some(e) = cause.downcast_ref::<dynpsn::Error>() {
            use dynpsn::Error as E;
            match e {
                E::Parse { .. } | E::EmptyDomain { .. } | E::Manifest(_) | E::MissingFile(_) | E::Format(_) => {
                    return EXIT_INPUT
                }
                E::Io(io) if io.kind() == std::io::ErrorKind::NotFound => return EXIT_INPUT,
                E::Json(_) => return EXIT_INPUT,
                _ => {}
            }
        }
        if let Some(io) = cause.downcast_ref::<std::io::Error>() {
            if io.kind() == std::io::ErrorKind::NotFound {
                return EXIT_INPUT;
            }
        }
    }
    EXIT_FAILURE
}
