//! File formats, run directories and command-line plumbing around
//! [`infostat_core`].

pub mod backend;
pub mod canonical;
pub mod cli;
pub mod config;
pub mod pipeline;
pub mod predictions;
pub mod report;
pub mod run;
pub mod formats;
mod error;
pub mod synthetic;

pub use error::{Error, Result};
pub use infostat_core as core;
