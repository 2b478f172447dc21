//! Runtime side of supportsim: file formats, chat backends, the run
//! manifest, the session service and the CLI.

pub mod config;
pub mod gateway;
pub mod io;
pub mod service;
pub mod esconv;
pub mod cli;
