//! Chat-completion abstraction shared by every role.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

/// Which pipeline role is asking. Scripted fixtures are keyed by this.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoleTag {
    Seeker,
    Counselor,
    Supporter,
    Scenario,
    Profile,
}

impl RoleTag {
    pub const ALL: [RoleTag; 5] =
        [RoleTag::Seeker, RoleTag::Counselor, RoleTag::Supporter, RoleTag::Scenario, RoleTag::Profile];

    pub fn as_str(self) -> &'static str {
        match self {
            RoleTag::Seeker => "seeker",
            RoleTag::Counselor => "counselor",
            RoleTag::Supporter => "supporter",
            RoleTag::Scenario => "scenario",
            RoleTag::Profile => "profile",
        }
    }
}

impl fmt::Display for RoleTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChatRole {
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: ChatRole,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub system_prompt: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl ChatRequest {
    pub const DEFAULT_TEMPERATURE: f64 = 0.7;
    pub const DEFAULT_MAX_TOKENS: u32 = 256;

    /// A single user message under a system prompt, default sampling.
    pub fn single(system_prompt: impl Into<String>, user: impl Into<String>) -> Self {
        Self {
            system_prompt: system_prompt.into(),
            messages: alloc::vec![ChatMessage { role: ChatRole::User, text: user.into() }],
            temperature: Self::DEFAULT_TEMPERATURE,
            max_tokens: Self::DEFAULT_MAX_TOKENS,
        }
    }

    pub fn with_sampling(mut self, temperature: f64, max_tokens: u32) -> Self {
        self.temperature = temperature;
        self.max_tokens = max_tokens;
        self
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if self.messages.is_empty() {
            return Err(BackendError::InvalidRequest(String::from("messages must not be empty")));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(BackendError::InvalidRequest(alloc::format!(
                "temperature {} outside [0, 2]",
                self.temperature
            )));
        }
        if self.max_tokens == 0 {
            return Err(BackendError::InvalidRequest(String::from("max_tokens must be positive")));
        }
        Ok(())
    }

    /// Concatenated prompt text, for inspection in tests and logs.
    pub fn rendered(&self) -> String {
        let mut out = self.system_prompt.clone();
        for m in &self.messages {
            out.push('\n');
            out.push_str(&m.text);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BackendError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("fixture exhausted for role {0}")]
    FixtureUnderrun(RoleTag),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("backend misconfigured: {0}")]
    Config(String),
}

/// A chat-completion endpoint.
pub trait ChatBackend {
    fn complete(&self, role: RoleTag, request: &ChatRequest) -> Result<String, BackendError>;
}

impl<T: ChatBackend + ?Sized> ChatBackend for &T {
    fn complete(&self, role: RoleTag, request: &ChatRequest) -> Result<String, BackendError> {
        (**self).complete(role, request)
    }
}

impl<T: ChatBackend + ?Sized> ChatBackend for alloc::boxed::Box<T> {
    fn complete(&self, role: RoleTag, request: &ChatRequest) -> Result<String, BackendError> {
        (**self).complete(role, request)
    }
}

impl<T: ChatBackend + ?Sized> ChatBackend for alloc::sync::Arc<T> {
    fn complete(&self, role: RoleTag, request: &ChatRequest) -> Result<String, BackendError> {
        (**self).complete(role, request)
    }
}

/// One line of a replay fixture.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureEntry {
    pub role_tag: RoleTag,
    pub text: String,
}

/// Per-role FIFO queues of canned completions.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReplayQueue {
    queues: BTreeMap<RoleTag, VecDeque<String>>,
}

impl ReplayQueue {
    pub fn new(entries: impl IntoIterator<Item = FixtureEntry>) -> Self {
        let mut queues: BTreeMap<RoleTag, VecDeque<String>> = BTreeMap::new();
        for e in entries {
            queues.entry(e.role_tag).or_default().push_back(e.text);
        }
        Self { queues }
    }

    /// Next completion for `role`. Empty fixture text is a protocol error
    /// so that replay behaves like a live backend returning nothing.
    pub fn next(&mut self, role: RoleTag) -> Result<String, BackendError> {
        let text = self
            .queues
            .get_mut(&role)
            .and_then(VecDeque::pop_front)
            .ok_or(BackendError::FixtureUnderrun(role))?;
        if text.trim().is_empty() {
            return Err(BackendError::Protocol(String::from("empty completion")));
        }
        Ok(text)
    }

    pub fn remaining(&self, role: RoleTag) -> usize {
        self.queues.get(&role).map_or(0, VecDeque::len)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replay_is_fifo_per_role() {
        let mut q = ReplayQueue::new([
            FixtureEntry { role_tag: RoleTag::Seeker, text: "I failed my exam.".into() },
            FixtureEntry { role_tag: RoleTag::Supporter, text: "That sounds hard.".into() },
            FixtureEntry { role_tag: RoleTag::Seeker, text: "Yes.".into() },
        ]);
        assert_eq!(q.next(RoleTag::Seeker).unwrap(), "I failed my exam.");
        assert_eq!(q.next(RoleTag::Seeker).unwrap(), "Yes.");
        assert_eq!(q.next(RoleTag::Seeker), Err(BackendError::FixtureUnderrun(RoleTag::Seeker)));
        assert_eq!(q.remaining(RoleTag::Supporter), 1);
        assert_eq!(q.next(RoleTag::Counselor), Err(BackendError::FixtureUnderrun(RoleTag::Counselor)));
    }

    #[test]
    fn request_validation() {
        let ok = ChatRequest::single("sys", "hi");
        assert!(ok.validate().is_ok());
        assert!(ok.clone().with_sampling(2.5, 10).validate().is_err());
        assert!(ok.clone().with_sampling(0.5, 0).validate().is_err());
        let mut empty = ok;
        empty.messages.clear();
        assert!(empty.validate().is_err());
    }

    #[test]
    fn fixture_json_shape() {
        let e: FixtureEntry = serde_json::from_str(r#"{"role_tag":"counselor","text":"Question"}"#).unwrap();
        assert_eq!(e.role_tag, RoleTag::Counselor);
    }
}
