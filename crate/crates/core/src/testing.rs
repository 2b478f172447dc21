//! Single-threaded test doubles for [`ChatBackend`].

use alloc::string::String;
use alloc::vec::Vec;
use core::cell::RefCell;

use crate::backend::{BackendError, ChatBackend, ChatRequest, FixtureEntry, ReplayQueue, RoleTag};

/// Replays fixture entries per role and records every request it sees.
#[derive(Debug, Default)]
pub struct ReplayBackend {
    queue: RefCell<ReplayQueue>,
    log: RefCell<Vec<(RoleTag, ChatRequest)>>,
}

impl ReplayBackend {
    pub fn new(entries: impl IntoIterator<Item = FixtureEntry>) -> Self {
        Self { queue: RefCell::new(ReplayQueue::new(entries)), log: RefCell::new(Vec::new()) }
    }

    /// Convenience constructor from `(role, text)` pairs.
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (RoleTag, &'a str)>) -> Self {
        Self::new(pairs.into_iter().map(|(role_tag, text)| FixtureEntry { role_tag, text: String::from(text) }))
    }

    pub fn requests(&self) -> Vec<(RoleTag, ChatRequest)> {
        self.log.borrow().clone()
    }

    pub fn remaining(&self, role: RoleTag) -> usize {
        self.queue.borrow().remaining(role)
    }
}

impl ChatBackend for ReplayBackend {
    fn complete(&self, role: RoleTag, request: &ChatRequest) -> Result<String, BackendError> {
        self.log.borrow_mut().push((role, request.clone()));
        self.queue.borrow_mut().next(role)
    }
}

/// Fails every call. For code paths that must not reach a backend.
#[derive(Debug, Clone, Copy, Default)]
pub struct Unreachable;

impl ChatBackend for Unreachable {
    fn complete(&self, role: RoleTag, _request: &ChatRequest) -> Result<String, BackendError> {
        Err(BackendError::Transport(alloc::format!("unexpected {role} call")))
    }
}
