//! The eight canonical support strategies and label normalization.

use alloc::string::String;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// A canonical support strategy.
///
/// Declaration order is the canonical label order used for tie-breaking and
/// for every 8-wide vector in this crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StrategyLabel {
    Question,
    Others,
    ProvidingSuggestions,
    AffirmationAndReassurance,
    SelfDisclosure,
    ReflectionOfFeelings,
    Information,
    RestatementOrParaphrasing,
}

pub const STRATEGY_COUNT: usize = 8;

impl StrategyLabel {
    pub const ALL: [StrategyLabel; STRATEGY_COUNT] = [
        StrategyLabel::Question,
        StrategyLabel::Others,
        StrategyLabel::ProvidingSuggestions,
        StrategyLabel::AffirmationAndReassurance,
        StrategyLabel::SelfDisclosure,
        StrategyLabel::ReflectionOfFeelings,
        StrategyLabel::Information,
        StrategyLabel::RestatementOrParaphrasing,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyLabel::Question => "Question",
            StrategyLabel::Others => "Others",
            StrategyLabel::ProvidingSuggestions => "Providing Suggestions",
            StrategyLabel::AffirmationAndReassurance => "Affirmation and Reassurance",
            StrategyLabel::SelfDisclosure => "Self-disclosure",
            StrategyLabel::ReflectionOfFeelings => "Reflection of Feelings",
            StrategyLabel::Information => "Information",
            StrategyLabel::RestatementOrParaphrasing => "Restatement or Paraphrasing",
        }
    }

    /// Position in the canonical order.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    /// Strict lookup used when loading corpora: trims and matches
    /// case-insensitively against canonical names and the alias table.
    pub fn parse_strict(text: &str) -> Option<Self> {
        let key = text.trim();
        if key.is_empty() {
            return None;
        }
        Self::ALL
            .iter()
            .copied()
            .find(|label| label.as_str().eq_ignore_ascii_case(key))
            .or_else(|| {
                ALIASES
                    .iter()
                    .find(|(alias, _)| alias.eq_ignore_ascii_case(key))
                    .map(|(_, label)| *label)
            })
    }

    /// Tolerant mapping for free-form model output. Never fails: anything
    /// unrecognised becomes [`StrategyLabel::Others`].
    pub fn normalize(text: &str) -> Self {
        Self::recognize(text).unwrap_or(StrategyLabel::Others)
    }

    /// Like [`StrategyLabel::normalize`] but reports unrecognised text as
    /// `None` instead of folding it into `Others`.
    pub fn recognize(text: &str) -> Option<Self> {
        let cleaned = clean_choice(text);
        Self::parse_strict(&cleaned).or_else(|| find_embedded(&cleaned))
    }
}

impl fmt::Display for StrategyLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse_strict(s).ok_or_else(|| Error::UnknownStrategy(String::from(s)))
    }
}

impl Serialize for StrategyLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for StrategyLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        StrategyLabel::parse_strict(&raw)
            .ok_or_else(|| serde::de::Error::custom(alloc::format!("unknown strategy {raw:?}")))
    }
}

/// Lowercase aliases seen in ESConv-style annotations and model output.
const ALIASES: &[(&str, StrategyLabel)] = &[
    ("questions", StrategyLabel::Question),
    ("questioning", StrategyLabel::Question),
    ("asking questions", StrategyLabel::Question),
    ("other", StrategyLabel::Others),
    ("providing suggestion", StrategyLabel::ProvidingSuggestions),
    ("suggestions", StrategyLabel::ProvidingSuggestions),
    ("suggestion", StrategyLabel::ProvidingSuggestions),
    ("affirmation & reassurance", StrategyLabel::AffirmationAndReassurance),
    ("affirmation", StrategyLabel::AffirmationAndReassurance),
    ("reassurance", StrategyLabel::AffirmationAndReassurance),
    ("self disclosure", StrategyLabel::SelfDisclosure),
    ("selfdisclosure", StrategyLabel::SelfDisclosure),
    ("reflection of feeling", StrategyLabel::ReflectionOfFeelings),
    ("reflection", StrategyLabel::ReflectionOfFeelings),
    ("reflecting feelings", StrategyLabel::ReflectionOfFeelings),
    ("providing information", StrategyLabel::Information),
    ("restatement or paraphrase", StrategyLabel::RestatementOrParaphrasing),
    ("restatement", StrategyLabel::RestatementOrParaphrasing),
    ("paraphrasing", StrategyLabel::RestatementOrParaphrasing),
];

/// Lowercases and strips list markers, quotes, brackets and a leading
/// "strategy:" style prefix from an LLM choice.
fn clean_choice(text: &str) -> String {
    let mut s: String = text.trim().to_lowercase();

    for prefix in ["strategy:", "selected strategy:", "answer:", "choice:"] {
        if let Some(rest) = s.strip_prefix(prefix) {
            s = String::from(rest.trim_start());
        }
    }

    // list markers: "3.", "3)", "(3)", "-", "*", "•"
    let trimmed = strip_list_marker(&s);
    let trimmed = trimmed.trim_matches(|c: char| {
        c.is_whitespace() || matches!(c, '"' | '\'' | '`' | '[' | ']' | '(' | ')' | '*' | '.' | '!' | ',' | ';' | ':')
    });
    String::from(trimmed)
}

fn strip_list_marker(s: &str) -> &str {
    let s = s.trim_start();
    if let Some(rest) = s.strip_prefix(['-', '*', '•']) {
        return rest.trim_start();
    }
    let s_inner = s.strip_prefix('(').unwrap_or(s);
    let marker_len = s_inner
        .char_indices()
        .take_while(|(_, c)| c.is_ascii_digit())
        .map(|(i, c)| i + c.len_utf8())
        .last()
        .unwrap_or(0);
    if marker_len > 0 {
        let rest = &s_inner[marker_len..];
        if let Some(rest) = rest.strip_prefix(['.', ')', ':']) {
            return rest.trim_start();
        }
    }
    s
}

/// Earliest canonical name or alias embedded in a longer answer; longer
/// names win at the same position.
fn find_embedded(cleaned: &str) -> Option<StrategyLabel> {
    let mut best: Option<(usize, usize, StrategyLabel)> = None;
    let canon = StrategyLabel::ALL.iter().map(|l| (l.as_str(), *l));
    for (name, label) in canon.chain(ALIASES.iter().copied()) {
        let needle = name.to_lowercase();
        if let Some(pos) = find_word(cleaned, &needle) {
            let better = match best {
                None => true,
                Some((p, len, _)) => pos < p || (pos == p && needle.len() > len),
            };
            if better {
                best = Some((pos, needle.len(), label));
            }
        }
    }
    best.map(|(_, _, label)| label)
}

/// Byte offset of `needle` in `hay` at word boundaries.
fn find_word(hay: &str, needle: &str) -> Option<usize> {
    let mut start = 0;
    while let Some(off) = hay[start..].find(needle) {
        let pos = start + off;
        let end = pos + needle.len();
        let left_ok = hay[..pos].chars().next_back().is_none_or(|c| !c.is_alphanumeric());
        let right_ok = hay[end..].chars().next().is_none_or(|c| !c.is_alphanumeric());
        if left_ok && right_ok {
            return Some(pos);
        }
        start = pos + needle.chars().next().map_or(1, char::len_utf8);
    }
    None
}
