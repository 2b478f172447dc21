//! Dialogue records: speakers, utterances, seeker profiles, and the
//! structural checks shared by generation, filtering and analysis.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};

use crate::strategy::StrategyLabel;
use crate::taxonomy::{Category, ProblemType};
use crate::text::word_count;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Speaker {
    Seeker,
    Supporter,
}

impl Speaker {
    pub fn as_str(self) -> &'static str {
        match self {
            Speaker::Seeker => "seeker",
            Speaker::Supporter => "supporter",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "seeker" => Some(Speaker::Seeker),
            "supporter" => Some(Speaker::Supporter),
            _ => None,
        }
    }

    pub fn other(self) -> Self {
        match self {
            Speaker::Seeker => Speaker::Supporter,
            Speaker::Supporter => Speaker::Seeker,
        }
    }
}

impl fmt::Display for Speaker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Speaker {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Speaker {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        Speaker::parse(&raw)
            .ok_or_else(|| serde::de::Error::custom(alloc::format!("unknown speaker {raw:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    pub speaker: Speaker,
    pub text: String,
    #[serde(default)]
    pub strategy: Option<StrategyLabel>,
}

impl Utterance {
    pub fn seeker(text: impl Into<String>) -> Self {
        Self { speaker: Speaker::Seeker, text: text.into(), strategy: None }
    }

    pub fn supporter(text: impl Into<String>, strategy: StrategyLabel) -> Self {
        Self { speaker: Speaker::Supporter, text: text.into(), strategy: Some(strategy) }
    }

    pub fn unlabeled_supporter(text: impl Into<String>) -> Self {
        Self { speaker: Speaker::Supporter, text: text.into(), strategy: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SeekerProfile {
    pub name: String,
    pub gender: String,
    pub address: String,
    pub occupation: String,
    pub personality: String,
    pub hobbies: String,
}

impl SeekerProfile {
    pub const FIELDS: [&'static str; 6] =
        ["name", "gender", "address", "occupation", "personality", "hobbies"];

    pub fn is_complete(&self) -> bool {
        self.fields().iter().all(|(_, v)| !v.trim().is_empty())
    }

    pub fn fields(&self) -> [(&'static str, &str); 6] {
        [
            ("Name", &self.name),
            ("Gender", &self.gender),
            ("Address", &self.address),
            ("Occupation", &self.occupation),
            ("Personality", &self.personality),
            ("Hobbies", &self.hobbies),
        ]
    }

    /// `Key: value` lines, the same shape the profile parser reads.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (key, value) in self.fields() {
            out.push_str(key);
            out.push_str(": ");
            out.push_str(value);
            out.push('\n');
        }
        out.pop();
        out
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Meta {
    pub generator_tag: String,
    pub rng_seed: u64,
    pub created_at: String,
    #[serde(default, skip_serializing_if = "core::ops::Not::not")]
    pub aborted: bool,
    /// Anything else found on the record, kept verbatim.
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dialogue {
    pub id: String,
    pub problem_type: ProblemType,
    pub scenario: String,
    pub profile: SeekerProfile,
    pub utterances: Vec<Utterance>,
    pub meta: Meta,
}

#[derive(Serialize, Deserialize)]
struct DialogueRecord {
    id: String,
    problem_type: String,
    category: Category,
    scenario: String,
    #[serde(default)]
    profile: SeekerProfile,
    utterances: Vec<Utterance>,
    #[serde(default)]
    meta: Meta,
    #[serde(flatten)]
    extra: Map<String, Value>,
}

impl Serialize for Dialogue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        DialogueRecord {
            id: self.id.clone(),
            problem_type: self.problem_type.name.clone(),
            category: self.problem_type.category,
            scenario: self.scenario.clone(),
            profile: self.profile.clone(),
            utterances: self.utterances.clone(),
            meta: self.meta.clone(),
            extra: Map::new(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Dialogue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let record = DialogueRecord::deserialize(deserializer)?;
        let mut meta = record.meta;
        for (key, value) in record.extra {
            meta.extra.entry(key).or_insert(value);
        }
        Ok(Dialogue {
            id: record.id,
            problem_type: ProblemType::new(record.category, record.problem_type),
            scenario: record.scenario,
            profile: record.profile,
            utterances: record.utterances,
            meta,
        })
    }
}

impl Dialogue {
    pub fn new(id: impl Into<String>, problem_type: ProblemType, scenario: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            problem_type,
            scenario: scenario.into(),
            profile: SeekerProfile::default(),
            utterances: Vec::new(),
            meta: Meta::default(),
        }
    }

    pub fn supporter_turns(&self) -> impl Iterator<Item = &Utterance> {
        self.utterances.iter().filter(|u| u.speaker == Speaker::Supporter)
    }

    pub fn strategies(&self) -> impl Iterator<Item = StrategyLabel> + '_ {
        self.supporter_turns().filter_map(|u| u.strategy)
    }

    /// All utterance texts joined by single spaces, no speaker tags.
    pub fn plain_text(&self) -> String {
        let mut out = String::new();
        for u in &self.utterances {
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(&u.text);
        }
        out
    }

    pub fn is_alternating(&self) -> bool {
        is_alternating(&self.utterances)
    }
}

/// Strict alternation starting with the seeker.
pub fn is_alternating(utterances: &[Utterance]) -> bool {
    let mut expected = Speaker::Seeker;
    for u in utterances {
        if u.speaker != expected {
            return false;
        }
        expected = expected.other();
    }
    true
}

/// Concatenates runs of same-speaker utterances with a single space. A
/// merged supporter utterance keeps its first constituent's strategy.
pub fn merge_consecutive(dialogue: &Dialogue) -> Dialogue {
    let mut merged: Vec<Utterance> = Vec::with_capacity(dialogue.utterances.len());
    for u in &dialogue.utterances {
        match merged.last_mut() {
            Some(last) if last.speaker == u.speaker => {
                if !u.text.is_empty() {
                    if !last.text.is_empty() {
                        last.text.push(' ');
                    }
                    last.text.push_str(&u.text);
                }
            }
            _ => merged.push(u.clone()),
        }
    }
    Dialogue { utterances: merged, ..dialogue.clone() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationPolicy {
    pub min_utterances: usize,
    pub max_utterances: usize,
    /// `None` disables the scenario length check.
    pub min_scenario_words: Option<usize>,
}

impl Default for ValidationPolicy {
    fn default() -> Self {
        Self { min_utterances: 8, max_utterances: 30, min_scenario_words: Some(20) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Violation {
    TooShort,
    TooLong,
    MissingStrategy,
    NonAlternating,
    EmptyUtterance,
    ShortScenario,
}

impl Violation {
    pub fn as_str(self) -> &'static str {
        match self {
            Violation::TooShort => "too_short",
            Violation::TooLong => "too_long",
            Violation::MissingStrategy => "missing_strategy",
            Violation::NonAlternating => "non_alternating",
            Violation::EmptyUtterance => "empty_utterance",
            Violation::ShortScenario => "short_scenario",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn validate_dialogue(dialogue: &Dialogue, policy: &ValidationPolicy) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = dialogue.utterances.len();
    if n < policy.min_utterances {
        out.push(Violation::TooShort);
    }
    if n > policy.max_utterances {
        out.push(Violation::TooLong);
    }
    if dialogue
        .utterances
        .iter()
        .any(|u| u.speaker == Speaker::Supporter && u.strategy.is_none())
    {
        out.push(Violation::MissingStrategy);
    }
    if !dialogue.is_alternating() {
        out.push(Violation::NonAlternating);
    }
    if dialogue.utterances.iter().any(|u| u.text.trim().is_empty()) {
        out.push(Violation::EmptyUtterance);
    }
    if let Some(min_words) = policy.min_scenario_words {
        if word_count(&dialogue.scenario) < min_words {
            out.push(Violation::ShortScenario);
        }
    }
    out
}

impl fmt::Display for Dialogue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for u in &self.utterances {
            match u.strategy {
                Some(s) => writeln!(f, "{} [{}]: {}", u.speaker, s, u.text)?,
                None => writeln!(f, "{}: {}", u.speaker, u.text)?,
            }
        }
        Ok(())
    }
}

/// Renders utterances as `Seeker: ...` / `Supporter: ...` lines for prompts.
pub fn render_history(utterances: &[Utterance]) -> String {
    let mut out = String::new();
    for u in utterances {
        let tag = match u.speaker {
            Speaker::Seeker => "Seeker",
            Speaker::Supporter => "Supporter",
        };
        out.push_str(tag);
        out.push_str(": ");
        out.push_str(&u.text);
        out.push('\n');
    }
    if out.ends_with('\n') {
        out.pop();
    }
    out
}

/// The trailing `window` utterances.
pub fn history_window(utterances: &[Utterance], window: usize) -> &[Utterance] {
    &utterances[utterances.len().saturating_sub(window)..]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategy::StrategyLabel::*;
    use alloc::vec;

    fn dialogue(utterances: Vec<Utterance>) -> Dialogue {
        let mut d = Dialogue::new(
            "d1",
            ProblemType::new(Category::LifeAndWorkStress, "Job Crisis"),
            "I lost my job last week after eight years at the same company and I have no idea how to tell my family about it yet.",
        );
        d.utterances = utterances;
        d
    }

    #[test]
    fn merge_examples() {
        let d = dialogue(vec![Utterance::seeker("hi"), Utterance::seeker("I'm sad"), Utterance::supporter("ok", Question)]);
        let m = merge_consecutive(&d);
        assert_eq!(m.utterances, vec![Utterance::seeker("hi I'm sad"), Utterance::supporter("ok", Question)]);

        let alt = dialogue(vec![Utterance::seeker("a"), Utterance::supporter("b", Others)]);
        assert_eq!(merge_consecutive(&alt), alt);

        let sup = dialogue(vec![Utterance::supporter("How?", Question), Utterance::supporter("Here.", Information)]);
        assert_eq!(merge_consecutive(&sup).utterances, vec![Utterance::supporter("How? Here.", Question)]);
    }

    #[test]
    fn validation_examples() {
        let policy = ValidationPolicy { min_utterances: 8, max_utterances: 30, min_scenario_words: Some(20) };
        let mut utts = Vec::new();
        for i in 0..5 {
            utts.push(Utterance::seeker(alloc::format!("seeker {i}")));
            utts.push(Utterance::supporter(alloc::format!("supporter {i}"), Question));
        }
        assert!(validate_dialogue(&dialogue(utts.clone()), &policy).is_empty());

        assert_eq!(validate_dialogue(&dialogue(utts[..4].to_vec()), &policy), vec![Violation::TooShort]);

        let mut missing = utts.clone();
        missing[3].strategy = None;
        assert_eq!(validate_dialogue(&dialogue(missing), &policy), vec![Violation::MissingStrategy]);

        let mut bad = dialogue(utts.clone());
        bad.utterances.swap(0, 1);
        bad.utterances[2].text = String::from("  ");
        bad.scenario = String::from("too short");
        assert_eq!(
            validate_dialogue(&bad, &policy),
            vec![Violation::NonAlternating, Violation::EmptyUtterance, Violation::ShortScenario]
        );
    }

    #[test]
    fn json_shape() {
        let mut d = dialogue(vec![Utterance::seeker("hi"), Utterance::supporter("hello", AffirmationAndReassurance)]);
        d.meta = Meta { generator_tag: "test".into(), rng_seed: 7, created_at: "1970-01-01T00:00:00Z".into(), ..Default::default() };
        let json = serde_json::to_value(&d).unwrap();
        assert_eq!(json["problem_type"], "Job Crisis");
        assert_eq!(json["category"], "Life and Work Stress");
        assert_eq!(json["utterances"][0]["strategy"], Value::Null);
        assert_eq!(json["utterances"][1]["strategy"], "Affirmation and Reassurance");
        assert!(json["meta"].get("aborted").is_none());

        let mut with_extra = json.clone();
        with_extra["source"] = Value::from("esconv");
        let back: Dialogue = serde_json::from_value(with_extra).unwrap();
        assert_eq!(back.meta.extra["source"], "esconv");
        assert_eq!(back.utterances, d.utterances);
    }

    #[test]
    fn history_helpers() {
        let utts: Vec<Utterance> = (0..8)
            .map(|i| if i % 2 == 0 { Utterance::seeker(alloc::format!("s{i}")) } else { Utterance::supporter(alloc::format!("r{i}"), Others) })
            .collect();
        let w = history_window(&utts, 6);
        assert_eq!(w.len(), 6);
        assert_eq!(w[0].text, "s2");
        assert_eq!(render_history(&utts[..2]), "Seeker: s0\nSupporter: r1");
    }
}
