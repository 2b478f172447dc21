//! Strategy-conditioned supporter replies.

use alloc::string::String;

use rand::Rng;

use crate::backend::{BackendError, ChatBackend, RoleTag};
use crate::dialogue::{history_window, render_history, Dialogue, Speaker, Utterance};
use crate::error::{Error, Result};
use crate::pools::SeedPools;
use crate::role::RoleSettings;
use crate::strategy::StrategyLabel;
use crate::taxonomy::ProblemType;
use crate::text::truncate_sentences;


/// A seed dialogue to show the supporter as a worked case.
pub fn pick_exemplar<'a, R: Rng + ?Sized>(pools: &'a SeedPools, problem_type: &ProblemType, rng: &mut R) -> Result<&'a Dialogue> {
    pools.pick_scenario_seed(problem_type, rng).map(|seed| &seed.dialogue)
}

/// Supporter reply realizing `strategy`. The reply is capped at
/// `settings.sentence_cap` sentences and tagged with `strategy`; the tag
/// records the instruction, not verified compliance.
pub fn supporter_turn(
    strategy: StrategyLabel,
    history: &[Utterance],
    exemplar: &Dialogue,
    backend: &dyn ChatBackend,
    settings: &RoleSettings,
) -> Result<Utterance> {
    match history.last() {
        Some(u) if u.speaker == Speaker::Seeker => {}
        _ => return Err(Error::Invalid(String::from("supporter history must end with a seeker utterance"))),
    }
    let window = history_window(history, settings.history_window);
    let rendered = render_history(window);
    let example = render_history(&exemplar.utterances);
    let text = settings.ask(
        backend,
        RoleTag::Supporter,
        &[("strategy", strategy.as_str()), ("history", &rendered), ("example_dialogue", &example)],
    )?;
    let text = truncate_sentences(text.trim(), settings.sentence_cap);
    if text.is_empty() {
        return Err(BackendError::Protocol(String::from("empty supporter completion")).into());
    }
    Ok(Utterance::supporter(text, strategy))
}
