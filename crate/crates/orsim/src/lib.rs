//! Command line front end of `orsim-core`: image IO, the plain-text config,
//! model/annotation/detection/metric file formats and the subcommands
//! `calibrate`, `train`, `detect`, `eval` and `synth`.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod io;

pub use config::{Provenance, RunConfig};
pub use error::{CliError, Result};
