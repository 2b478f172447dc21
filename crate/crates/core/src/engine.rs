//! The seeker → counselor → supporter loop and batch generation over
//! self-iterating seed pools.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::backend::{ChatBackend, RoleTag};
use crate::counselor::{Counselor, CounselorMode, Decision};
use crate::dialogue::{Dialogue, Meta, Speaker};
use crate::error::{Error, Result};
use crate::pools::{ScenarioSeed, SeedPools};
use crate::postprocess::PostProcessor;
use crate::role::RoleSettings;
use crate::seeker::{generate_profile, generate_scenario, sample_problem_type, seeker_turn, Persona};
use crate::supporter::{pick_exemplar, supporter_turn};
use crate::taxonomy::Taxonomy;

pub const DEFAULT_CREATED_AT: &str = "1970-01-01T00:00:00Z";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub max_rounds: usize,
    pub min_rounds_for_acceptance: usize,
    pub counselor_mode: CounselorMode,
    pub rng_seed: u64,
    pub self_iterate: bool,
    pub generator_tag: String,
    /// Stamped into every record. Fixed rather than read from a clock so
    /// reruns are byte-identical.
    pub created_at: String,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            max_rounds: 12,
            min_rounds_for_acceptance: 4,
            counselor_mode: CounselorMode::Statistical,
            rng_seed: 0,
            self_iterate: true,
            generator_tag: String::from("supportsim"),
            created_at: String::from(DEFAULT_CREATED_AT),
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_rounds == 0 || self.min_rounds_for_acceptance == 0 {
            return Err(Error::Invalid(String::from("max_rounds and min_rounds_for_acceptance must be positive")));
        }
        if self.min_rounds_for_acceptance > self.max_rounds {
            return Err(Error::Invalid(format!(
                "min_rounds_for_acceptance ({}) exceeds max_rounds ({})",
                self.min_rounds_for_acceptance, self.max_rounds
            )));
        }
        Ok(())
    }
}

/// One backend per role; they may all be the same object.
#[derive(Clone, Copy)]
pub struct RoleBackends<'a> {
    pub seeker: &'a dyn ChatBackend,
    pub counselor: &'a dyn ChatBackend,
    pub supporter: &'a dyn ChatBackend,
    pub scenario: &'a dyn ChatBackend,
    pub profile: &'a dyn ChatBackend,
}

impl<'a> RoleBackends<'a> {
    pub fn uniform(backend: &'a dyn ChatBackend) -> Self {
        Self { seeker: backend, counselor: backend, supporter: backend, scenario: backend, profile: backend }
    }

    pub fn get(&self, role: RoleTag) -> &'a dyn ChatBackend {
        match role {
            RoleTag::Seeker => self.seeker,
            RoleTag::Counselor => self.counselor,
            RoleTag::Supporter => self.supporter,
            RoleTag::Scenario => self.scenario,
            RoleTag::Profile => self.profile,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Farewell,
    MaxRounds,
    Aborted,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Farewell => "farewell",
            Termination::MaxRounds => "max_rounds",
            Termination::Aborted => "aborted",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DialogueRun {
    pub dialogue: Dialogue,
    /// One entry per supporter turn, in order.
    pub decisions: Vec<Decision>,
    pub termination: Termination,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchFailure {
    pub index: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BatchReport {
    pub requested: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub aborted: usize,
    pub pool_growth: usize,
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<BatchFailure>,
}

#[derive(Debug, Clone)]
pub struct BatchOutput {
    /// Every dialogue the batch produced, aborted ones included, unfiltered.
    pub corpus: Vec<Dialogue>,
    pub runs: Vec<DialogueRun>,
    pub pools: SeedPools,
    pub report: BatchReport,
}

/// Seed for dialogue `index` of a batch: the first word of ChaCha8 stream
/// `index` under `master`.
pub fn child_seed(master: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng.next_u64()
}

pub struct Engine<'a> {
    pub config: EngineConfig,
    pub settings: RoleSettings,
    pub counselor: Counselor,
    pub backends: RoleBackends<'a>,
    pub post: PostProcessor,
    pub taxonomy: Taxonomy,
}

impl<'a> Engine<'a> {
    pub fn new(config: EngineConfig, counselor: Counselor, backends: RoleBackends<'a>) -> Self {
        let counselor = counselor.with_mode(config.counselor_mode);
        Self {
            config,
            settings: RoleSettings::default(),
            counselor,
            backends,
            post: PostProcessor::default(),
            taxonomy: Taxonomy::builtin(),
        }
    }

    /// Plays one dialogue. Role failures end it early with `meta.aborted`
    /// set; they are not errors here.
    pub fn run_dialogue(
        &self,
        id: &str,
        persona: &Persona,
        exemplar: &Dialogue,
        seed: u64,
        rng: &mut ChaCha8Rng,
    ) -> Result<DialogueRun> {
        self.config.validate()?;
        let mut dialogue = Dialogue::new(id, persona.problem_type.clone(), persona.scenario.clone());
        dialogue.profile = persona.profile.clone();
        dialogue.meta = Meta {
            generator_tag: self.config.generator_tag.clone(),
            rng_seed: seed,
            created_at: self.config.created_at.clone(),
            ..Meta::default()
        };
        let farewells = &self.post.farewells;
        let mut decisions = Vec::new();
        let mut termination = Termination::MaxRounds;

        for round in 1..=self.config.max_rounds {
            let step = self.round(persona, exemplar, &mut dialogue, &mut decisions, rng);
            if let Err(err) = step {
                log::warn!("{id}: aborted in round {round}: {err}");
                dialogue.meta.aborted = true;
                dialogue.meta.extra.insert("abort_reason".to_string(), Value::String(err.to_string()));
                termination = Termination::Aborted;
                break;
            }
            let n = dialogue.utterances.len();
            let seeker_bye = farewells.is_farewell(&dialogue.utterances[n - 2].text);
            let supporter_bye = farewells.is_farewell(&dialogue.utterances[n - 1].text);
            if seeker_bye && supporter_bye {
                termination = Termination::Farewell;
                break;
            }
        }
        dialogue.meta.extra.insert("termination".to_string(), Value::String(termination.as_str().to_string()));
        Ok(DialogueRun { dialogue, decisions, termination })
    }

    fn round(
        &self,
        persona: &Persona,
        exemplar: &Dialogue,
        dialogue: &mut Dialogue,
        decisions: &mut Vec<Decision>,
        rng: &mut ChaCha8Rng,
    ) -> Result<()> {
        let seeker = seeker_turn(persona, &dialogue.utterances, self.backends.seeker, &self.settings)?;
        dialogue.utterances.push(seeker);
        let decision = self.counselor.select(&dialogue.utterances, self.backends.counselor, &self.settings, rng)?;
        let reply = supporter_turn(decision.strategy, &dialogue.utterances, exemplar, self.backends.supporter, &self.settings)?;
        debug_assert_eq!(reply.speaker, Speaker::Supporter);
        decisions.push(decision);
        dialogue.utterances.push(reply);
        Ok(())
    }

    /// Samples a problem type and grows a scenario and a profile from the
    /// pools. The profile is added to the profile pool.
    pub fn make_persona(&self, pools: &mut SeedPools, rng: &mut ChaCha8Rng) -> Result<Persona> {
        let problem_type = sample_problem_type(&self.taxonomy, rng)?;
        let seed = pools.pick_scenario_seed(&problem_type, rng)?.clone();
        let scenario = generate_scenario(&problem_type, &seed, self.backends.scenario, &self.settings)?;
        let profile_seed = pools.pick_profile_seed(&problem_type, rng)?.clone();
        let profile = generate_profile(&problem_type, &scenario, &profile_seed, self.backends.profile, &self.settings, pools)?;
        Ok(Persona { problem_type, scenario, profile })
    }

    /// Whether a finished dialogue may seed later generations.
    pub fn accepts(&self, dialogue: &Dialogue) -> core::result::Result<Dialogue, String> {
        let rounds = dialogue.supporter_turns().count();
        if rounds < self.config.min_rounds_for_acceptance {
            return Err(format!("only {rounds} rounds"));
        }
        self.post.judge(dialogue).map_err(|d| d.primary_reason().to_string())
    }

    /// Generates `n` dialogues sequentially. Each dialogue draws from its
    /// own child RNG, so dialogue `i` depends only on the master seed, the
    /// fixtures and the pool state left by dialogues `0..i`.
    pub fn run_batch(&self, n: usize, mut pools: SeedPools) -> Result<BatchOutput> {
        self.config.validate()?;
        if pools.scenario_pool().is_empty() || pools.profile_pool().is_empty() {
            return Err(Error::EmptyPool);
        }
        let master = self.config.rng_seed;
        let mut report = BatchReport { requested: n, master_seed: master, ..BatchReport::default() };
        let mut corpus = Vec::with_capacity(n);
        let mut runs = Vec::with_capacity(n);

        for index in 0..n {
            let seed = child_seed(master, index as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let id = format!("{}-{}-{:05}", self.config.generator_tag, master, index);

            let persona = match self.make_persona(&mut pools, &mut rng) {
                Ok(p) => p,
                Err(err) => {
                    log::warn!("{id}: persona generation failed: {err}");
                    report.aborted += 1;
                    report.failures.push(BatchFailure { index, error: err.to_string() });
                    continue;
                }
            };
            let exemplar = pick_exemplar(&pools, &persona.problem_type, &mut rng)?.clone();
            let run = self.run_dialogue(&id, &persona, &exemplar, seed, &mut rng)?;

            if run.dialogue.meta.aborted {
                report.aborted += 1;
            } else {
                match self.accepts(&run.dialogue) {
                    Ok(trimmed) => {
                        report.accepted += 1;
                        if self.config.self_iterate {
                            pools.add_scenario(ScenarioSeed {
                                problem_type: persona.problem_type.clone(),
                                scenario: persona.scenario.clone(),
                                dialogue: trimmed,
                            })?;
                            report.pool_growth += 1;
                        }
                    }
                    Err(reason) => {
                        log::info!("{id}: rejected ({reason})");
                        report.rejected += 1;
                    }
                }
            }
            corpus.push(run.dialogue.clone());
            runs.push(run);
        }
        Ok(BatchOutput { corpus, runs, pools, report })
    }
}
