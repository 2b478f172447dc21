//! Seeker persona construction and seeker turns.
//!
//! A persona is a problem type, a scenario grown from a seed scenario, and
//! a six-field profile grown from a seed profile. Generated profiles are
//! added back to the profile pool.

use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::backend::{ChatBackend, RoleTag};
use crate::dialogue::{history_window, render_history, SeekerProfile, Utterance};
use crate::error::{Error, Result};
use crate::pools::{ProfileSeed, ScenarioSeed, SeedPools, MIN_SCENARIO_WORDS};
use crate::role::RoleSettings;
use crate::taxonomy::{ProblemType, Taxonomy};
use crate::text::{truncate_sentences, word_count};
use crate::backend::BackendError;

pub fn sample_problem_type<R: Rng + ?Sized>(taxonomy: &Taxonomy, rng: &mut R) -> Result<ProblemType> {
    taxonomy.sample(rng)
}

/// A new scenario for `problem_type`, written from `seed`. Short answers
/// are re-prompted with the same seed.
pub fn generate_scenario(
    problem_type: &ProblemType,
    seed: &ScenarioSeed,
    backend: &dyn ChatBackend,
    settings: &RoleSettings,
) -> Result<String> {
    let example_dialogue = render_history(&seed.dialogue.utterances);
    let prompt = settings.prompts.scenario.render(&[
        ("problem_type", &problem_type.name),
        ("example_scenario", &seed.scenario),
        ("example_dialogue", &example_dialogue),
    ]);
    let mut request = settings.request(RoleTag::Scenario, prompt);
    request.validate()?;

    let attempts = settings.max_attempts.max(1);
    let mut last_words = 0;
    for attempt in 1..=attempts {
        let text = backend.complete(RoleTag::Scenario, &request)?;
        let text = text.trim();
        last_words = word_count(text);
        if last_words >= MIN_SCENARIO_WORDS {
            return Ok(String::from(text));
        }
        log::debug!("scenario attempt {attempt} too short ({last_words} words)");
        request = RoleSettings::follow_up(
            &request,
            text,
            "That scenario is too short. Describe the specific event in more than 20 words.",
        );
    }
    Err(Error::ScenarioTooShort { attempts, words: last_words, min: MIN_SCENARIO_WORDS })
}

/// Reads `Key: value` lines into a profile. Keys are case-insensitive and
/// may carry list markers or markdown emphasis. Returns the names of the
/// missing fields on failure.
pub fn parse_profile(text: &str) -> core::result::Result<SeekerProfile, Vec<&'static str>> {
    let mut profile = SeekerProfile::default();
    for line in text.lines() {
        let line = line.trim().trim_start_matches(['-', '*', '•', ' ']);
        let Some((key, value)) = line.split_once(':') else { continue };
        let key = key.trim().trim_matches('*').trim().to_lowercase();
        let value = value.trim().trim_matches('*').trim();
        if value.is_empty() {
            continue;
        }
        let slot = match key.as_str() {
            "name" => &mut profile.name,
            "gender" | "sex" => &mut profile.gender,
            "address" | "location" | "city" => &mut profile.address,
            "occupation" | "job" | "profession" => &mut profile.occupation,
            "personality" | "personality traits" | "traits" => &mut profile.personality,
            "hobbies" | "hobby" | "interests" => &mut profile.hobbies,
            _ => continue,
        };
        if slot.is_empty() {
            *slot = String::from(value);
        }
    }
    let missing: Vec<&'static str> = SeekerProfile::FIELDS
        .iter()
        .zip(profile.fields())
        .filter(|(_, (_, v))| v.trim().is_empty())
        .map(|(name, _)| *name)
        .collect();
    if missing.is_empty() {
        Ok(profile)
    } else {
        Err(missing)
    }
}

/// Generates a profile without touching any pool.
pub fn draft_profile(
    problem_type: &ProblemType,
    scenario: &str,
    seed: &ProfileSeed,
    backend: &dyn ChatBackend,
    settings: &RoleSettings,
) -> Result<SeekerProfile> {
    let example = seed.profile.render();
    let prompt = settings.prompts.profile.render(&[
        ("problem_type", &problem_type.name),
        ("scenario", scenario),
        ("profile", &example),
    ]);
    let mut request = settings.request(RoleTag::Profile, prompt);
    request.validate()?;

    let attempts = settings.max_attempts.max(1);
    for attempt in 1..=attempts {
        let text = backend.complete(RoleTag::Profile, &request)?;
        match parse_profile(&text) {
            Ok(profile) => return Ok(profile),
            Err(missing) => {
                log::debug!("profile attempt {attempt} missing {missing:?}");
                let correction = alloc::format!(
                    "The profile is missing: {}. Reply with all six lines (Name, Gender, Address, Occupation, Personality, Hobbies).",
                    missing.join(", ")
                );
                request = RoleSettings::follow_up(&request, &text, &correction);
            }
        }
    }
    Err(Error::ProfileParse { attempts })
}

/// Generates a profile and adds `(problem_type, scenario, profile)` to the
/// profile pool.
pub fn generate_profile(
    problem_type: &ProblemType,
    scenario: &str,
    seed: &ProfileSeed,
    backend: &dyn ChatBackend,
    settings: &RoleSettings,
    pools: &mut SeedPools,
) -> Result<SeekerProfile> {
    let profile = draft_profile(problem_type, scenario, seed, backend, settings)?;
    pools.add_profile(ProfileSeed {
        problem_type: problem_type.clone(),
        scenario: String::from(scenario),
        profile: profile.clone(),
    })?;
    Ok(profile)
}

/// The seeker persona a dialogue is grounded in.
#[derive(Debug, Clone, PartialEq)]
pub struct Persona {
    pub problem_type: ProblemType,
    pub scenario: String,
    pub profile: SeekerProfile,
}

const OPENING_HISTORY: &str = "(no messages yet; you start the conversation)";

/// Next seeker utterance given the dialogue so far. Only the last
/// `history_window` utterances reach the prompt.
pub fn seeker_turn(
    persona: &Persona,
    history: &[Utterance],
    backend: &dyn ChatBackend,
    settings: &RoleSettings,
) -> Result<Utterance> {
    let window = history_window(history, settings.history_window);
    let rendered = if window.is_empty() { String::from(OPENING_HISTORY) } else { render_history(window) };
    let profile = persona.profile.render();
    let text = settings.ask(
        backend,
        RoleTag::Seeker,
        &[
            ("problem_type", &persona.problem_type.name),
            ("scenario", &persona.scenario),
            ("profile", &profile),
            ("history", &rendered),
        ],
    )?;
    let text = truncate_sentences(text.trim(), settings.sentence_cap);
    if text.is_empty() {
        return Err(BackendError::Protocol(String::from("empty seeker completion")).into());
    }
    Ok(Utterance::seeker(text))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_well_formed_profile() {
        let p = parse_profile("Name: Ana\nGender: female\nAddress: Lisbon\nOccupation: nurse\nPersonality: anxious, caring\nHobbies: running").unwrap();
        assert_eq!(p.name, "Ana");
        assert_eq!(p.personality, "anxious, caring");
        assert_eq!(p.hobbies, "running");
    }

    #[test]
    fn parses_markdown_and_aliases() {
        let p = parse_profile("- **name:** Li Wei\n- GENDER: male\n- Location: Chengdu\n- Job: teacher\n- Personality traits: calm\n- Interests: chess\nextra words").unwrap();
        assert_eq!(p.name, "Li Wei");
        assert_eq!(p.address, "Chengdu");
        assert_eq!(p.hobbies, "chess");
    }

    #[test]
    fn reports_missing_fields() {
        let err = parse_profile("Name: Ana\nGender: female\nAddress: Lisbon\nOccupation: nurse\nPersonality: anxious").unwrap_err();
        assert_eq!(err, ["hobbies"]);
        assert_eq!(parse_profile("").unwrap_err().len(), 6);
    }
}
