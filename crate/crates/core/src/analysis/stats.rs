use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dialogue::{Dialogue, Speaker};
use crate::error::{Error, Result};
use crate::text::Tokenizer;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeakerStats {
    pub utterances: usize,
    pub avg_utterances_per_dialogue: f64,
    pub avg_utterance_length: f64,
}

/// Dialogue counts and average lengths, overall and per speaker. Lengths
/// are in tokens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub dialogues: usize,
    pub utterances: usize,
    pub avg_dialogue_length: f64,
    pub avg_utterance_length: f64,
    pub seeker: SpeakerStats,
    pub supporter: SpeakerStats,
}

impl StatsReport {
    /// `(section, row, value)` triples in table order.
    pub fn rows(&self) -> Vec<(&'static str, &'static str, f64)> {
        let mut rows = alloc::vec![
            ("Total", "# Dialogues", self.dialogues as f64),
            ("Total", "# Utterances", self.utterances as f64),
            ("Total", "Avg. Dialogue Length", self.avg_dialogue_length),
            ("Total", "Avg. Utterance Length", self.avg_utterance_length),
        ];
        for (section, s) in [("Seeker", &self.seeker), ("Supporter", &self.supporter)] {
            rows.push((section, "# Utterances", s.utterances as f64));
            rows.push((section, "Avg. # Utter. per Dialog", s.avg_utterances_per_dialogue));
            rows.push((section, "Avg. Utterance Length", s.avg_utterance_length));
        }
        rows
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Expects dialogues already merged with
/// [`merge_consecutive`](crate::dialogue::merge_consecutive).
pub fn corpus_statistics(corpus: &[Dialogue], tokenizer: &dyn Tokenizer) -> Result<StatsReport> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    // [seeker, supporter] utterance and token counts
    let mut utts = [0usize; 2];
    let mut tokens = [0usize; 2];
    for d in corpus {
        for u in &d.utterances {
            let i = match u.speaker {
                Speaker::Seeker => 0,
                Speaker::Supporter => 1,
            };
            utts[i] += 1;
            tokens[i] += tokenizer.tokenize(&u.text).len();
        }
    }
    let n = corpus.len();
    let total_utts = utts[0] + utts[1];
    let speaker = |i: usize| SpeakerStats {
        utterances: utts[i],
        avg_utterances_per_dialogue: ratio(utts[i], n),
        avg_utterance_length: ratio(tokens[i], utts[i]),
    };
    Ok(StatsReport {
        dialogues: n,
        utterances: total_utts,
        avg_dialogue_length: ratio(total_utts, n),
        avg_utterance_length: ratio(tokens[0] + tokens[1], total_utts),
        seeker: speaker(0),
        supporter: speaker(1),
    })
}
