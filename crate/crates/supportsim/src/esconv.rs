//! Converter for the public ESConv release (`ESConv.json`, one JSON array)
//! into dialogue records. Same-speaker runs are merged; the merged
//! supporter turn keeps its first strategy.

use std::path::Path;

use serde::Deserialize;
use serde_json::Value;

use supportsim_core::dialogue::merge_consecutive;
use supportsim_core::strategy::StrategyLabel;
use supportsim_core::taxonomy::{Category, ProblemType, Taxonomy};
use supportsim_core::{Dialogue, Meta, Utterance};

use crate::io::{self, IoError};

#[derive(Debug, Deserialize)]
struct RawDialogue {
    #[serde(default)]
    emotion_type: Option<String>,
    problem_type: String,
    #[serde(default)]
    situation: String,
    dialog: Vec<RawTurn>,
}

#[derive(Debug, Deserialize)]
struct RawTurn {
    speaker: String,
    content: String,
    #[serde(default)]
    annotation: Value,
}

/// ESConv names that differ from the taxonomy.
const ALIASES: &[(&str, &str)] = &[("breakup with partner", "Breakups or Divorce")];

fn problem_type(raw: &str, taxonomy: &Taxonomy) -> ProblemType {
    let name = ALIASES.iter().find(|(a, _)| a.eq_ignore_ascii_case(raw.trim())).map_or(raw, |(_, n)| n);
    match taxonomy.find(name) {
        Some(pt) => pt.clone(),
        None => {
            log::warn!("ESConv problem type {raw:?} not in taxonomy; filed under emotional issues");
            ProblemType::new(Category::EmotionalAndMentalHealth, raw.trim())
        }
    }
}

fn convert(index: usize, raw: RawDialogue, taxonomy: &Taxonomy) -> Result<Dialogue, String> {
    let mut d = Dialogue::new(format!("esconv-{index:05}"), problem_type(&raw.problem_type, taxonomy), raw.situation.trim());
    for (t, turn) in raw.dialog.iter().enumerate() {
        let text = turn.content.trim();
        let u = match turn.speaker.as_str() {
            "seeker" | "usr" => Utterance::seeker(text),
            "supporter" | "sys" => {
                let label = turn.annotation.get("strategy").and_then(Value::as_str);
                match label.map(StrategyLabel::parse_strict) {
                    Some(Some(s)) => Utterance::supporter(text, s),
                    Some(None) => return Err(format!("turn {t}: unknown strategy {:?}", label.unwrap_or_default())),
                    None => Utterance::unlabeled_supporter(text),
                }
            }
            other => return Err(format!("turn {t}: unknown speaker {other:?}")),
        };
        d.utterances.push(u);
    }
    let mut d = merge_consecutive(&d);
    d.meta = Meta { generator_tag: "esconv".into(), ..Meta::default() };
    if let Some(e) = raw.emotion_type {
        d.meta.extra.insert("emotion_type".into(), Value::String(e));
    }
    Ok(d)
}

/// Reads ESConv and returns dialogue records; entries with an unknown
/// speaker or strategy are errors naming the entry.
pub fn load_esconv(path: &Path, taxonomy: &Taxonomy) -> Result<Vec<Dialogue>, IoError> {
    let text = io::read_to_string(path)?;
    let raw: Vec<RawDialogue> =
        serde_json::from_str(&text).map_err(|e| IoError::Line { line: e.line(), message: format!("{}: {e}", path.display()) })?;
    raw.into_iter()
        .enumerate()
        .map(|(i, r)| convert(i, r, taxonomy).map_err(|m| IoError::Line { line: 0, message: format!("ESConv entry {i}: {m}") }))
        .collect()
}
