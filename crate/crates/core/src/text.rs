//! Tokenization, sentence capping and the farewell heuristic.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

/// Splits text into tokens for the analyzer and metrics.
pub trait Tokenizer {
    fn tokenize(&self, text: &str) -> Vec<String>;
}

/// Lowercase, split on runs of non-alphanumeric characters.
#[derive(Debug, Clone, Copy, Default)]
pub struct DefaultTokenizer;

impl Tokenizer for DefaultTokenizer {
    fn tokenize(&self, text: &str) -> Vec<String> {
        text.split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(str::to_lowercase)
            .collect()
    }
}

/// Splits on whitespace only and keeps case. Handy for hand-built fixtures.
#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceTokenizer;

impl Tokenizer for WhitespaceTokenizer {
    fn tokenize(&self, text: &str) -> Vec<String> {
        text.split_whitespace().map(ToString::to_string).collect()
    }
}

/// Number of maximal non-whitespace runs.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Splits at `.`, `!` or `?` followed by whitespace or end of text. The
/// terminator stays with its sentence; no abbreviation handling.
pub fn split_sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if matches!(c, '.' | '!' | '?') {
            let at_boundary = chars.peek().is_none_or(|(_, next)| next.is_whitespace());
            if at_boundary {
                let end = i + c.len_utf8();
                let sentence = text[start..end].trim();
                if !sentence.is_empty() {
                    out.push(sentence);
                }
                start = end;
            }
        }
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        out.push(tail);
    }
    out
}

pub fn sentence_count(text: &str) -> usize {
    split_sentences(text).len()
}

/// Keeps the first `cap` sentences, joined by single spaces. Text that is
/// already within the cap comes back unchanged.
pub fn truncate_sentences(text: &str, cap: usize) -> String {
    let cap = cap.max(1);
    let sentences = split_sentences(text);
    if sentences.len() <= cap {
        return text.to_string();
    }
    sentences[..cap].join(" ")
}

/// Phrases that mark a closing/greeting utterance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FarewellLexicon {
    phrases: Vec<Vec<String>>,
    max_words: usize,
}

pub const DEFAULT_FAREWELLS: &[&str] = &[
    "goodbye",
    "good bye",
    "bye",
    "take care",
    "thanks for your help",
    "thank you for your help",
    "have a good day",
    "have a nice day",
    "see you",
    "farewell",
];

impl Default for FarewellLexicon {
    fn default() -> Self {
        Self::new(DEFAULT_FAREWELLS.iter().copied())
    }
}

impl FarewellLexicon {
    pub const DEFAULT_MAX_WORDS: usize = 8;

    pub fn new<'a>(phrases: impl IntoIterator<Item = &'a str>) -> Self {
        let phrases = phrases
            .into_iter()
            .map(normalize_words)
            .filter(|p| !p.is_empty())
            .collect();
        Self { phrases, max_words: Self::DEFAULT_MAX_WORDS }
    }

    /// One phrase per line; blank lines and `#` comments ignored.
    pub fn parse(text: &str) -> Self {
        Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn with_max_words(mut self, max_words: usize) -> Self {
        self.max_words = max_words;
        self
    }

    /// True when the text is short and contains a lexicon phrase as a
    /// contiguous word sequence.
    pub fn is_farewell(&self, text: &str) -> bool {
        let words = normalize_words(text);
        if words.is_empty() || words.len() > self.max_words {
            return false;
        }
        self.phrases
            .iter()
            .any(|phrase| words.windows(phrase.len()).any(|w| w == phrase.as_slice()))
    }
}

/// Lowercased words with punctuation stripped (apostrophes are dropped so
/// "I'm" becomes "im").
fn normalize_words(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|w| {
            w.chars()
                .filter(|c| c.is_alphanumeric() || *c == '-')
                .flat_map(char::to_lowercase)
                .collect::<String>()
        })
        .map(|w| String::from(w.trim_matches('-')))
        .filter(|w| !w.is_empty())
        .collect()
}
