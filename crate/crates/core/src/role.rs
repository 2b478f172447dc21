//! Settings shared by the seeker, counselor and supporter roles.

use alloc::string::String;

use crate::backend::{ChatBackend, ChatMessage, ChatRequest, ChatRole, RoleTag};
use crate::error::Result;
use crate::prompt::{system_prompt, PromptSet};

/// Utterances of history shown to any role.
pub const HISTORY_WINDOW: usize = 6;
/// Maximum sentences per generated utterance.
pub const SENTENCE_CAP: usize = 3;
/// Attempts for scenario and profile generation.
pub const MAX_ATTEMPTS: usize = 3;

#[derive(Debug, Clone)]
pub struct RoleSettings {
    pub prompts: PromptSet,
    pub temperature: f64,
    pub max_tokens: u32,
    pub history_window: usize,
    pub sentence_cap: usize,
    pub max_attempts: usize,
}

impl Default for RoleSettings {
    fn default() -> Self {
        Self {
            prompts: PromptSet::default(),
            temperature: ChatRequest::DEFAULT_TEMPERATURE,
            max_tokens: ChatRequest::DEFAULT_MAX_TOKENS,
            history_window: HISTORY_WINDOW,
            sentence_cap: SENTENCE_CAP,
            max_attempts: MAX_ATTEMPTS,
        }
    }
}

impl RoleSettings {
    pub fn request(&self, role: RoleTag, user: String) -> ChatRequest {
        ChatRequest::single(system_prompt(role), user).with_sampling(self.temperature, self.max_tokens)
    }

    /// Renders the role's template and runs one completion.
    pub fn ask(&self, backend: &dyn ChatBackend, role: RoleTag, vars: &[(&str, &str)]) -> Result<String> {
        let prompt = self.prompts.get(role).render(vars);
        let request = self.request(role, prompt);
        request.validate()?;
        Ok(backend.complete(role, &request)?)
    }

    /// Follow-up turn after a rejected answer: the original prompt, the
    /// rejected answer, and a correction.
    pub fn follow_up(request: &ChatRequest, rejected: &str, correction: &str) -> ChatRequest {
        let mut next = request.clone();
        next.messages.push(ChatMessage { role: ChatRole::Assistant, text: String::from(rejected) });
        next.messages.push(ChatMessage { role: ChatRole::User, text: String::from(correction) });
        next
    }
}
