//! Quality filters for generated corpora: redundant closing greetings,
//! seekers slipping into the supporter role, and length bounds.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use regex_automata::meta::Regex;
use serde::{Deserialize, Serialize};

use crate::dialogue::{Dialogue, Speaker};
use crate::error::{Error, Result};
use crate::text::FarewellLexicon;

/// Removes surplus farewells from the end of a dialogue. Within the
/// trailing run of farewell utterances only the first one per speaker is
/// kept; everything before the run is untouched.
pub fn trim_redundant_greetings(dialogue: &Dialogue, lexicon: &FarewellLexicon) -> Dialogue {
    let utts = &dialogue.utterances;
    let run_start = utts
        .iter()
        .rposition(|u| !lexicon.is_farewell(&u.text))
        .map_or(0, |i| i + 1);

    let mut kept = utts[..run_start].to_vec();
    let mut seen_seeker = false;
    let mut seen_supporter = false;
    for u in &utts[run_start..] {
        let seen = match u.speaker {
            Speaker::Seeker => &mut seen_seeker,
            Speaker::Supporter => &mut seen_supporter,
        };
        if !*seen {
            *seen = true;
            kept.push(u.clone());
        }
    }
    Dialogue { utterances: kept, ..dialogue.clone() }
}

/// Seeker-side patterns that signal the seeker is acting as the supporter.
#[derive(Debug, Clone)]
pub struct RolePatterns {
    patterns: Vec<(String, Regex)>,
}

pub const DEFAULT_ROLE_PATTERNS: &[(&str, &str)] = &[
    ("empathy-opener", r"(?i)^\W*i understand how you feel"),
    ("advice-question", r"(?i)^\W*have you considered"),
    ("recommendation", r"(?i)^\W*i recommend"),
    ("reflection-opener", r"(?i)^\W*it sounds like you"),
    ("advice-opener", r"(?i)^\W*you (should|could try)\b"),
];

impl Default for RolePatterns {
    fn default() -> Self {
        Self::new(DEFAULT_ROLE_PATTERNS.iter().copied()).expect("default patterns compile")
    }
}

impl RolePatterns {
    pub fn new<'a>(patterns: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self> {
        let patterns = patterns
            .into_iter()
            .map(|(reason, pattern)| {
                Regex::new(pattern)
                    .map(|re| (String::from(reason), re))
                    .map_err(|e| Error::Pattern { pattern: String::from(pattern), reason: alloc::format!("{e}") })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { patterns })
    }

    /// One regex per line, `#` comments. A line may name its reason as
    /// `reason<TAB>regex`; otherwise the regex doubles as the reason.
    pub fn parse(text: &str) -> Result<Self> {
        let entries: Vec<(&str, &str)> = text
            .lines()
            .map(str::trim_end)
            .filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
            .map(|l| match l.split_once('\t') {
                Some((reason, pattern)) => (reason.trim(), pattern.trim()),
                None => (l.trim(), l.trim()),
            })
            .collect();
        Self::new(entries)
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    /// Reason of the first pattern matching `text`.
    pub fn first_match(&self, text: &str) -> Option<&str> {
        self.patterns.iter().find(|(_, re)| re.is_match(text)).map(|(reason, _)| reason.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleFlag {
    pub index: usize,
    pub reason: String,
}

/// Seeker utterances that read like supporter turns.
pub fn detect_role_inconsistency(dialogue: &Dialogue, patterns: &RolePatterns) -> Vec<RoleFlag> {
    dialogue
        .utterances
        .iter()
        .enumerate()
        .filter(|(_, u)| u.speaker == Speaker::Seeker)
        .filter_map(|(index, u)| patterns.first_match(&u.text).map(|r| RoleFlag { index, reason: String::from(r) }))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterPolicy {
    pub min_utterances: usize,
    pub max_utterances: usize,
    pub max_flags: usize,
}

impl Default for FilterPolicy {
    fn default() -> Self {
        Self { min_utterances: 8, max_utterances: 30, max_flags: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    Aborted,
    TooShort,
    TooLong,
    RoleInconsistency,
}

impl DropReason {
    pub fn as_str(self) -> &'static str {
        match self {
            DropReason::Aborted => "aborted",
            DropReason::TooShort => "too_short",
            DropReason::TooLong => "too_long",
            DropReason::RoleInconsistency => "role_inconsistency",
        }
    }
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dropped {
    /// The dialogue after greeting trimming.
    pub dialogue: Dialogue,
    /// Every reason that applied, in [`DropReason`] order.
    pub reasons: Vec<DropReason>,
    pub flags: Vec<RoleFlag>,
}

impl Dropped {
    pub fn primary_reason(&self) -> DropReason {
        self.reasons[0]
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FilterOutcome {
    pub kept: Vec<Dialogue>,
    pub dropped: Vec<Dropped>,
}

#[derive(Debug, Clone, Default)]
pub struct PostProcessor {
    pub policy: FilterPolicy,
    pub farewells: FarewellLexicon,
    pub patterns: RolePatterns,
}

impl PostProcessor {
    pub fn new(policy: FilterPolicy) -> Self {
        Self { policy, ..Default::default() }
    }

    /// Trims one dialogue and decides whether it survives.
    pub fn judge(&self, dialogue: &Dialogue) -> core::result::Result<Dialogue, Dropped> {
        let trimmed = trim_redundant_greetings(dialogue, &self.farewells);
        let flags = detect_role_inconsistency(&trimmed, &self.patterns);
        let n = trimmed.utterances.len();
        let mut reasons = Vec::new();
        if trimmed.meta.aborted {
            reasons.push(DropReason::Aborted);
        }
        if n < self.policy.min_utterances {
            reasons.push(DropReason::TooShort);
        }
        if n > self.policy.max_utterances {
            reasons.push(DropReason::TooLong);
        }
        if flags.len() > self.policy.max_flags {
            reasons.push(DropReason::RoleInconsistency);
        }
        if reasons.is_empty() {
            Ok(trimmed)
        } else {
            Err(Dropped { dialogue: trimmed, reasons, flags })
        }
    }

    /// Partitions a corpus into kept and dropped dialogues, preserving
    /// input order on both sides.
    pub fn filter_corpus(&self, corpus: &[Dialogue]) -> FilterOutcome {
        let mut out = FilterOutcome::default();
        for d in corpus {
            match self.judge(d) {
                Ok(kept) => out.kept.push(kept),
                Err(dropped) => out.dropped.push(dropped),
            }
        }
        out
    }
}
