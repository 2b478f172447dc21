use alloc::string::String;

use crate::backend::BackendError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("unknown strategy {0:?}")]
    UnknownStrategy(String),
    #[error("unknown speaker {0:?}")]
    UnknownSpeaker(String),
    #[error("unknown problem type {0:?}")]
    UnknownProblemType(String),
    #[error("malformed taxonomy line {line}: {reason}")]
    Taxonomy { line: usize, reason: String },
    #[error("taxonomy is empty")]
    EmptyTaxonomy,
    #[error("seed pool is empty")]
    EmptyPool,
    #[error("scenario too short after {attempts} attempts ({words} words, need {min})")]
    ScenarioTooShort { attempts: usize, words: usize, min: usize },
    #[error("could not parse a complete profile after {attempts} attempts")]
    ProfileParse { attempts: usize },
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("no labeled supporter turns")]
    NoLabeledTurns,
    #[error("no documents with content")]
    EmptyDocuments,
    #[error("no {n}-grams in input")]
    NoNgrams { n: usize },
    #[error("length mismatch: {candidates} candidates vs {references} references")]
    LengthMismatch { candidates: usize, references: usize },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("invalid pattern {pattern:?}: {reason}")]
    Pattern { pattern: String, reason: String },
    #[error(transparent)]
    Backend(#[from] BackendError),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
