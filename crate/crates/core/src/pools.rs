//! Scenario and profile seed pools. Both only ever grow.

use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dialogue::{Dialogue, SeekerProfile};
use crate::error::{Error, Result};
use crate::taxonomy::ProblemType;
use crate::text::word_count;

/// Scenarios shorter than this many words are never stored.
pub const MIN_SCENARIO_WORDS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSeed {
    pub problem_type: ProblemType,
    pub scenario: String,
    pub dialogue: Dialogue,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSeed {
    pub problem_type: ProblemType,
    pub scenario: String,
    pub profile: SeekerProfile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolKind {
    Scenario,
    Profile,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SeedPools {
    scenario_pool: Vec<ScenarioSeed>,
    profile_pool: Vec<ProfileSeed>,
}

fn check_scenario(scenario: &str) -> Result<()> {
    let words = word_count(scenario);
    if words < MIN_SCENARIO_WORDS {
        return Err(Error::Invalid(alloc::format!(
            "scenario has {words} words, pools require at least {MIN_SCENARIO_WORDS}"
        )));
    }
    Ok(())
}

impl SeedPools {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn scenario_pool(&self) -> &[ScenarioSeed] {
        &self.scenario_pool
    }

    pub fn profile_pool(&self) -> &[ProfileSeed] {
        &self.profile_pool
    }

    pub fn is_empty(&self) -> bool {
        self.scenario_pool.is_empty() || self.profile_pool.is_empty()
    }

    pub fn add_scenario(&mut self, seed: ScenarioSeed) -> Result<()> {
        check_scenario(&seed.scenario)?;
        self.scenario_pool.push(seed);
        Ok(())
    }

    pub fn add_profile(&mut self, seed: ProfileSeed) -> Result<()> {
        check_scenario(&seed.scenario)?;
        if !seed.profile.is_complete() {
            return Err(Error::Invalid(String::from("profile seed has empty fields")));
        }
        self.profile_pool.push(seed);
        Ok(())
    }

    /// Seed for scenario generation: uniform over entries of the same
    /// problem type, then the same category, then the whole pool.
    pub fn pick_scenario_seed<R: Rng + ?Sized>(&self, problem_type: &ProblemType, rng: &mut R) -> Result<&ScenarioSeed> {
        pick_matching(&self.scenario_pool, problem_type, |s| &s.problem_type, rng)
    }

    pub fn pick_profile_seed<R: Rng + ?Sized>(&self, problem_type: &ProblemType, rng: &mut R) -> Result<&ProfileSeed> {
        pick_matching(&self.profile_pool, problem_type, |s| &s.problem_type, rng)
    }

    /// Pool records in storage order, scenario seeds first.
    pub fn to_records(&self) -> Vec<(PoolKind, Dialogue)> {
        let scenarios = self.scenario_pool.iter().map(|s| {
            let mut d = s.dialogue.clone();
            d.problem_type = s.problem_type.clone();
            d.scenario = s.scenario.clone();
            (PoolKind::Scenario, d)
        });
        let profiles = self.profile_pool.iter().enumerate().map(|(i, s)| {
            let mut d = Dialogue::new(alloc::format!("profile-{i}"), s.problem_type.clone(), s.scenario.clone());
            d.profile = s.profile.clone();
            (PoolKind::Profile, d)
        });
        scenarios.chain(profiles).collect()
    }

    pub fn from_records(records: impl IntoIterator<Item = (PoolKind, Dialogue)>) -> Result<Self> {
        let mut pools = Self::new();
        for (kind, d) in records {
            match kind {
                PoolKind::Scenario => pools.add_scenario(ScenarioSeed {
                    problem_type: d.problem_type.clone(),
                    scenario: d.scenario.clone(),
                    dialogue: d,
                })?,
                PoolKind::Profile => pools.add_profile(ProfileSeed {
                    problem_type: d.problem_type,
                    scenario: d.scenario,
                    profile: d.profile,
                })?,
            }
        }
        Ok(pools)
    }
}

fn pick_matching<'a, T, R: Rng + ?Sized>(
    pool: &'a [T],
    problem_type: &ProblemType,
    key: impl Fn(&T) -> &ProblemType,
    rng: &mut R,
) -> Result<&'a T> {
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    let same_type: Vec<&T> = pool.iter().filter(|s| key(s).name == problem_type.name).collect();
    let candidates = if !same_type.is_empty() {
        same_type
    } else {
        let same_cat: Vec<&T> = pool.iter().filter(|s| key(s).category == problem_type.category).collect();
        if same_cat.is_empty() {
            pool.iter().collect()
        } else {
            same_cat
        }
    };
    Ok(candidates[rng.random_range(0..candidates.len())])
}
