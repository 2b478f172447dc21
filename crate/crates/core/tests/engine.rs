mod common;

use common::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use supportsim_core::engine::{Engine, EngineConfig, RoleBackends, Termination};
use supportsim_core::seeker::Persona;
use supportsim_core::testing::ReplayBackend;
use supportsim_core::text::sentence_count;
use supportsim_core::{Category, Error, ProblemType, RoleTag, Speaker};

fn persona() -> Persona {
    Persona { problem_type: ProblemType::new(Category::LifeAndWorkStress, "Job Loss"), scenario: SCENARIO.into(), profile: profile() }
}

fn backend(script: Vec<(RoleTag, String)>) -> ReplayBackend {
    ReplayBackend::from_pairs(script.iter().map(|(r, t)| (*r, t.as_str())))
}

fn run_one(script: Vec<(RoleTag, String)>, cfg: EngineConfig) -> (supportsim_core::engine::DialogueRun, ReplayBackend) {
    let b = backend(script.into_iter().skip(2).collect());
    let run = {
        let engine = Engine::new(cfg, counselor(), RoleBackends::uniform(&b));
        let exemplar = seed_dialogue("ex", &persona().problem_type);
        engine.run_dialogue("d", &persona(), &exemplar, 11, &mut ChaCha8Rng::seed_from_u64(11)).unwrap()
    };
    (run, b)
}

#[test]
fn farewell_on_round_three() {
    let (run, _) = run_one(dialogue_script("a", 3, true), EngineConfig::default());
    assert_eq!(run.termination, Termination::Farewell);
    assert_eq!(run.dialogue.utterances.len(), 6);
    assert_eq!(run.decisions.len(), 3);
    assert!(run.dialogue.is_alternating());
    for u in run.dialogue.supporter_turns() {
        assert!(u.strategy.is_some());
        assert!(sentence_count(&u.text) <= 3);
    }
    assert_eq!(run.dialogue.meta.rng_seed, 11);
    assert!(!run.dialogue.meta.aborted);
}

#[test]
fn round_cap() {
    let cfg = EngineConfig { max_rounds: 2, min_rounds_for_acceptance: 1, ..EngineConfig::default() };
    let (run, _) = run_one(dialogue_script("a", 5, false), cfg);
    assert_eq!(run.termination, Termination::MaxRounds);
    assert_eq!(run.dialogue.utterances.len(), 4);
}

#[test]
fn same_fixture_same_bytes() {
    let a = run_one(dialogue_script("a", 4, true), EngineConfig::default()).0;
    let b = run_one(dialogue_script("a", 4, true), EngineConfig::default()).0;
    assert_eq!(serde_json::to_string(&a.dialogue).unwrap(), serde_json::to_string(&b.dialogue).unwrap());
}

#[test]
fn backend_failure_aborts_but_returns() {
    let mut script = dialogue_script("a", 3, false);
    script.pop(); // last supporter line missing
    let (run, _) = run_one(script, EngineConfig::default());
    assert_eq!(run.termination, Termination::Aborted);
    assert!(run.dialogue.meta.aborted);
    assert_eq!(run.dialogue.utterances.len(), 5);
    assert_eq!(run.decisions.len(), 2);
    assert!(run.dialogue.meta.extra["abort_reason"].as_str().unwrap().contains("supporter"));
}

#[test]
fn prompts_see_at_most_six_utterances() {
    let (_, b) = run_one(dialogue_script("a", 8, true), EngineConfig::default());
    let mut checked = 0;
    for (role, req) in b.requests() {
        let text = &req.messages[0].text;
        let lines = text.lines().filter(|l| l.starts_with("Seeker: ") || l.starts_with("Supporter: ")).count();
        if role == RoleTag::Seeker {
            assert!(lines <= 6, "seeker prompt had {lines} history lines");
            checked += 1;
        }
        if role == RoleTag::Supporter {
            // history window plus the exemplar dialogue (8 utterances)
            assert!(lines <= 6 + 8, "supporter prompt had {lines} lines");
        }
    }
    assert_eq!(checked, 8);
}

fn batch_script(parts: &[(usize, bool, bool)]) -> ReplayBackend {
    // (rounds, farewell, role-inconsistent)
    let mut all = Vec::new();
    for (i, &(rounds, farewell, bad)) in parts.iter().enumerate() {
        let mut s = dialogue_script(&format!("d{i}"), rounds, farewell);
        if bad {
            s[2].1 = "You should try going for a walk.".into();
        }
        all.extend(s);
    }
    backend(all)
}

#[test]
fn batch_grows_pool_by_accepted() {
    let b = batch_script(&[(5, true, false), (5, true, false), (5, true, false)]);
    let engine = Engine::new(EngineConfig { rng_seed: 7, ..EngineConfig::default() }, counselor(), RoleBackends::uniform(&b));
    let pools = seed_pools();
    let out = engine.run_batch(3, pools.clone()).unwrap();
    assert_eq!((out.report.accepted, out.report.rejected, out.report.aborted), (3, 0, 0));
    assert_eq!(out.report.pool_growth, 3);
    assert_eq!(out.pools.scenario_pool().len(), pools.scenario_pool().len() + 3);
    // every generated profile joins the profile pool
    assert_eq!(out.pools.profile_pool().len(), pools.profile_pool().len() + 3);
    assert_eq!(out.corpus.len(), 3);
    for run in &out.runs {
        assert_eq!(run.decisions.len(), run.dialogue.supporter_turns().count());
        assert_eq!(run.dialogue.utterances[0].speaker, Speaker::Seeker);
    }
}

#[test]
fn rejected_dialogue_stays_out_of_pool() {
    let b = batch_script(&[(5, true, false), (5, true, true), (5, true, false)]);
    let engine = Engine::new(EngineConfig { rng_seed: 7, ..EngineConfig::default() }, counselor(), RoleBackends::uniform(&b));
    let out = engine.run_batch(3, seed_pools()).unwrap();
    assert_eq!((out.report.accepted, out.report.rejected), (2, 1));
    assert_eq!(out.report.pool_growth, 2);
}

#[test]
fn self_iterate_off_keeps_pool() {
    let b = batch_script(&[(5, true, false), (5, true, false)]);
    let cfg = EngineConfig { self_iterate: false, ..EngineConfig::default() };
    let engine = Engine::new(cfg, counselor(), RoleBackends::uniform(&b));
    let out = engine.run_batch(2, seed_pools()).unwrap();
    assert_eq!(out.report.accepted, 2);
    assert_eq!(out.report.pool_growth, 0);
    assert_eq!(out.pools.scenario_pool().len(), 2);
}

#[test]
fn empty_pool_and_bad_config() {
    let b = batch_script(&[]);
    let engine = Engine::new(EngineConfig::default(), counselor(), RoleBackends::uniform(&b));
    assert!(matches!(engine.run_batch(1, Default::default()), Err(Error::EmptyPool)));
    let cfg = EngineConfig { max_rounds: 3, min_rounds_for_acceptance: 4, ..EngineConfig::default() };
    assert!(cfg.validate().is_err());
}

#[test]
fn persona_failure_is_recorded() {
    let b = backend(vec![(RoleTag::Scenario, "too short".into())]);
    let engine = Engine::new(EngineConfig::default(), counselor(), RoleBackends::uniform(&b));
    let out = engine.run_batch(1, seed_pools()).unwrap();
    assert_eq!(out.report.aborted, 1);
    assert_eq!(out.report.failures.len(), 1);
    assert!(out.corpus.is_empty());
}
