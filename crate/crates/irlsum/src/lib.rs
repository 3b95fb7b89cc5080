//! IO, artifacts and the command-line front end for `irlsum-core`.

pub mod artifacts;
pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod error;
pub mod fsutil;
pub mod jsonl;
pub mod manifest;

pub use error::{Error, Result};
