//! Automatic evaluation of a response model against a labeled corpus.
//!
//! Two context modes: `reference_context` feeds the model the gold prefix
//! at every supporter position; `generated_context` keeps the gold seeker
//! turns but replaces earlier supporter turns with the model's own replies.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::backend::{ChatBackend, RoleTag};
use crate::dialogue::{render_history, Dialogue, Speaker, Utterance};
use crate::error::{Error, Result};
use crate::metrics::{corpus_bleu, corpus_rouge, distinct_n_responses, RougeVariant};
use crate::role::RoleSettings;
use crate::text::{truncate_sentences, Tokenizer};

/// Something that writes the supporter reply at `position` (an utterance
/// index into `dialogue`) given `history`.
pub trait ModelAdapter {
    fn respond(&self, dialogue: &Dialogue, position: usize, history: &[Utterance]) -> Result<String>;
}

impl<M: ModelAdapter + ?Sized> ModelAdapter for &M {
    fn respond(&self, dialogue: &Dialogue, position: usize, history: &[Utterance]) -> Result<String> {
        (**self).respond(dialogue, position, history)
    }
}

/// Repeats the last seeker utterance.
#[derive(Debug, Clone, Copy, Default)]
pub struct EchoModel;

impl ModelAdapter for EchoModel {
    fn respond(&self, _dialogue: &Dialogue, _position: usize, history: &[Utterance]) -> Result<String> {
        history
            .iter()
            .rev()
            .find(|u| u.speaker == Speaker::Seeker)
            .map(|u| u.text.clone())
            .ok_or_else(|| Error::Invalid(String::from("no seeker utterance in history")))
    }
}

/// Fixed replies keyed by `(dialogue id, position)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CannedModel {
    replies: BTreeMap<(String, usize), String>,
}

impl CannedModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, dialogue_id: impl Into<String>, position: usize, reply: impl Into<String>) {
        self.replies.insert((dialogue_id.into(), position), reply.into());
    }

    /// Replies with the gold supporter text everywhere.
    pub fn gold(corpus: &[Dialogue]) -> Self {
        let mut model = Self::new();
        for d in corpus {
            for (i, u) in d.utterances.iter().enumerate() {
                if u.speaker == Speaker::Supporter {
                    model.insert(d.id.clone(), i, u.text.clone());
                }
            }
        }
        model
    }

    pub fn len(&self) -> usize {
        self.replies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.replies.is_empty()
    }
}

impl ModelAdapter for CannedModel {
    fn respond(&self, dialogue: &Dialogue, position: usize, _history: &[Utterance]) -> Result<String> {
        self.replies
            .get(&(dialogue.id.clone(), position))
            .cloned()
            .ok_or_else(|| Error::Invalid(format!("no canned reply for {} at {position}", dialogue.id)))
    }
}

const CHAT_MODEL_PROMPT: &str = "You are a warm, attentive supporter in an emotional support conversation. Reply to the seeker's latest message in at most three sentences.\n\nConversation so far:\n";

/// Asks a chat backend for the supporter reply.
pub struct ChatModel<'a> {
    pub backend: &'a dyn ChatBackend,
    pub settings: RoleSettings,
}

impl ModelAdapter for ChatModel<'_> {
    fn respond(&self, _dialogue: &Dialogue, _position: usize, history: &[Utterance]) -> Result<String> {
        let mut prompt = String::from(CHAT_MODEL_PROMPT);
        prompt.push_str(&render_history(history));
        let request = self.settings.request(RoleTag::Supporter, prompt);
        request.validate()?;
        let text = self.backend.complete(RoleTag::Supporter, &request)?;
        Ok(truncate_sentences(text.trim(), self.settings.sentence_cap))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    GeneratedContext,
    ReferenceContext,
}

impl EvalMode {
    pub fn as_str(self) -> &'static str {
        match self {
            EvalMode::GeneratedContext => "generated_context",
            EvalMode::ReferenceContext => "reference_context",
        }
    }
}

/// One evaluated supporter position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub dialogue_id: String,
    /// Utterance index of the gold supporter turn.
    pub position: usize,
    /// 1-based supporter turn number within the dialogue.
    pub turn: usize,
    pub history: Vec<Utterance>,
    pub reference: String,
    /// `None` when the model failed here.
    pub candidate: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct EvalReport {
    pub bleu2: f64,
    pub bleu4: f64,
    pub rouge2_f1: f64,
    pub rougeL_f1: f64,
    pub distinct2: f64,
    pub distinct3: f64,
    pub n_responses: usize,
    pub skipped: usize,
    pub mode: EvalMode,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRun {
    pub report: EvalReport,
    pub records: Vec<EvalRecord>,
}

/// Runs `model` over every supporter position of `corpus`. Model failures
/// skip the position; in generated-context mode a failed reply is simply
/// absent from later histories.
pub fn run_eval(model: &dyn ModelAdapter, corpus: &[Dialogue], mode: EvalMode, tokenizer: &dyn Tokenizer) -> Result<EvalRun> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut records = Vec::new();
    for d in corpus {
        if !d.is_alternating() {
            return Err(Error::Invalid(format!("dialogue {} does not alternate seeker/supporter", d.id)));
        }
        let mut generated: Vec<Utterance> = Vec::new();
        let mut turn = 0;
        for (position, gold) in d.utterances.iter().enumerate() {
            if gold.speaker == Speaker::Seeker {
                generated.push(gold.clone());
                continue;
            }
            turn += 1;
            let history = match mode {
                EvalMode::ReferenceContext => d.utterances[..position].to_vec(),
                EvalMode::GeneratedContext => generated.clone(),
            };
            let (candidate, error) = match model.respond(d, position, &history) {
                Ok(text) => (Some(text), None),
                Err(err) => {
                    log::warn!("{} position {position}: {err}", d.id);
                    (None, Some(err.to_string()))
                }
            };
            if let Some(text) = &candidate {
                generated.push(Utterance { speaker: Speaker::Supporter, text: text.clone(), strategy: gold.strategy });
            }
            records.push(EvalRecord {
                dialogue_id: d.id.clone(),
                position,
                turn,
                history,
                reference: gold.text.clone(),
                candidate,
                error,
            });
        }
    }

    let pairs: Vec<(Vec<String>, Vec<String>)> = records
        .iter()
        .filter_map(|r| r.candidate.as_ref().map(|c| (tokenizer.tokenize(c), tokenizer.tokenize(&r.reference))))
        .collect();
    let skipped = records.len() - pairs.len();
    if pairs.is_empty() {
        return Err(Error::Invalid(format!("no responses to score ({skipped} positions failed)")));
    }
    let (cands, refs): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    let mut warnings = Vec::new();
    let mut distinct = |n: usize| match distinct_n_responses(&cands, n) {
        Ok(v) => v,
        Err(err) => {
            warnings.push(format!("distinct-{n}: {err}; reported as 0"));
            0.0
        }
    };
    let (distinct2, distinct3) = (distinct(2), distinct(3));
    if skipped > 0 {
        warnings.push(format!("{skipped} position(s) skipped after model failure"));
    }
    let report = EvalReport {
        bleu2: corpus_bleu(&cands, &refs, 2)?,
        bleu4: corpus_bleu(&cands, &refs, 4)?,
        rouge2_f1: 100.0 * corpus_rouge(&cands, &refs, RougeVariant::Rouge2)?,
        rougeL_f1: 100.0 * corpus_rouge(&cands, &refs, RougeVariant::RougeL)?,
        distinct2,
        distinct3,
        n_responses: cands.len(),
        skipped,
        mode,
        warnings,
    };
    Ok(EvalRun { report, records })
}
