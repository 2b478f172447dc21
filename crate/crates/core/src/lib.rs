//! Role-played emotional-support dialogue synthesis: a seeker simulator, a
//! strategy counselor and a supporter, driven over self-growing seed pools,
//! plus the corpus analyses and response metrics used to study the output.
//!
//! Allocation only; IO, HTTP and the CLI live in the `supportsim` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod backend;
pub mod counselor;
pub mod dialogue;
pub mod engine;
pub mod error;
pub mod eval;
pub mod metrics;
pub mod pools;
pub mod postprocess;
pub mod prompt;
pub mod role;
pub mod seeker;
pub mod strategy;
pub mod supporter;
pub mod taxonomy;
pub mod testing;
pub mod text;

pub use backend::{BackendError, ChatBackend, ChatRequest, RoleTag};
pub use dialogue::{Dialogue, Meta, SeekerProfile, Speaker, Utterance};
pub use error::{Error, Result};
pub use strategy::StrategyLabel;
pub use taxonomy::{Category, ProblemType, Taxonomy};
