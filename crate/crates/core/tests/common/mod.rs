#![allow(dead_code)]

use supportsim_core::counselor::{Counselor, TransitionModel};
use supportsim_core::pools::{ProfileSeed, ScenarioSeed, SeedPools};
use supportsim_core::{Category, Dialogue, ProblemType, RoleTag, SeekerProfile, StrategyLabel, Utterance};

pub const SCENARIO: &str = "After eight years at the same firm I was laid off last Friday with no warning, and I have not told my partner because I feel ashamed.";

pub fn seed_dialogue(id: &str, pt: &ProblemType) -> Dialogue {
    use StrategyLabel::*;
    let mut d = Dialogue::new(id, pt.clone(), SCENARIO);
    let turns = [
        ("I lost my job and I can't stop thinking about it.", "What happened when they told you?", Question),
        ("They just said the role was gone.", "That must have been a real shock.", ReflectionOfFeelings),
        ("It was. I feel useless now.", "Losing a job says nothing about your worth.", AffirmationAndReassurance),
        ("I guess I should start looking.", "You could list three firms you admire and reach out this week.", ProvidingSuggestions),
    ];
    for (s, r, l) in turns {
        d.utterances.push(Utterance::seeker(s));
        d.utterances.push(Utterance::supporter(r, l));
    }
    d
}

pub fn profile() -> SeekerProfile {
    SeekerProfile {
        name: "Dana".into(),
        gender: "female".into(),
        address: "Leeds".into(),
        occupation: "accountant".into(),
        personality: "reserved, conscientious".into(),
        hobbies: "cycling".into(),
    }
}

pub fn seed_pools() -> SeedPools {
    let mut pools = SeedPools::new();
    for (i, pt) in [
        ProblemType::new(Category::LifeAndWorkStress, "Job Loss"),
        ProblemType::new(Category::EmotionalAndMentalHealth, "Anxiety"),
    ]
    .iter()
    .enumerate()
    {
        pools
            .add_scenario(ScenarioSeed { problem_type: pt.clone(), scenario: SCENARIO.into(), dialogue: seed_dialogue(&format!("seed-{i}"), pt) })
            .unwrap();
        pools.add_profile(ProfileSeed { problem_type: pt.clone(), scenario: SCENARIO.into(), profile: profile() }).unwrap();
    }
    pools
}

pub fn counselor() -> Counselor {
    let pools = seed_pools();
    let corpus: Vec<Dialogue> = pools.scenario_pool().iter().map(|s| s.dialogue.clone()).collect();
    Counselor::statistical(TransitionModel::fit(&corpus).unwrap(), 8)
}

pub const PROFILE_TEXT: &str = "Name: Sam\nGender: male\nAddress: Porto\nOccupation: chef\nPersonality: quiet, stubborn\nHobbies: fishing";

/// Fixture lines for one generated dialogue of `rounds` rounds that ends
/// with a farewell exchange on the last round when `farewell` is set.
pub fn dialogue_script(tag: &str, rounds: usize, farewell: bool) -> Vec<(RoleTag, String)> {
    let mut out = vec![
        (RoleTag::Scenario, format!("{tag}: my manager criticised my report in front of the whole team this morning and I have been replaying it all day at my desk.")),
        (RoleTag::Profile, PROFILE_TEXT.to_string()),
    ];
    for r in 1..=rounds {
        if farewell && r == rounds {
            out.push((RoleTag::Seeker, "Thanks, bye!".into()));
            out.push((RoleTag::Supporter, "Take care, goodbye!".into()));
        } else {
            out.push((RoleTag::Seeker, format!("{tag} seeker line {r}. It still bothers me.")));
            out.push((RoleTag::Supporter, format!("{tag} supporter line {r}. That makes sense. Tell me more. Extra sentence dropped.")));
        }
    }
    out
}
