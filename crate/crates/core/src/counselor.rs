//! Strategy selection for the next supporter turn.
//!
//! Two interchangeable counselors: a prompted one that asks a chat backend
//! to pick from the eight strategies, and a statistical one backed by a
//! [`TransitionModel`] estimated from a labeled corpus. The model conditions
//! on the previous supporter strategy and on coarse conversation progress
//! (six equal-width buckets).

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::backend::{ChatBackend, RoleTag};
use crate::dialogue::{history_window, render_history, Dialogue, Speaker, Utterance};
use crate::error::{Error, Result};
use crate::role::RoleSettings;
use crate::strategy::{StrategyLabel, STRATEGY_COUNT};

pub const PROGRESS_BUCKETS: usize = 6;

const ROW_TOLERANCE: f64 = 1e-9;

type Row = [f64; STRATEGY_COUNT];
type CountRow = [u64; STRATEGY_COUNT];

/// Progress bucket of the `k`-th (1-based) of `total` supporter turns.
pub fn progress_bucket(k: usize, total: usize) -> usize {
    if total == 0 || k == 0 {
        return 0;
    }
    (PROGRESS_BUCKETS * (k - 1) / total).min(PROGRESS_BUCKETS - 1)
}

/// Bucket for the next supporter turn of a live dialogue, with `done`
/// supporter turns so far and an assumed dialogue length of `expected`.
pub fn live_bucket(done: usize, expected: usize) -> usize {
    progress_bucket(done + 1, expected.max(1))
}

/// `P(next strategy | previous strategy, progress bucket)` plus a prior for
/// the first supporter turn.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionModel {
    prior: Row,
    /// `[bucket][previous][next]`
    transitions: [[Row; STRATEGY_COUNT]; PROGRESS_BUCKETS],
    prior_counts: CountRow,
    counts: [[CountRow; STRATEGY_COUNT]; PROGRESS_BUCKETS],
    /// Rows that had no observations and hold the marginal instead.
    fallback: [[bool; STRATEGY_COUNT]; PROGRESS_BUCKETS],
}

impl TransitionModel {
    /// Maximum-likelihood fit. `smoothing` is an additive pseudo-count per
    /// cell; zero gives the pure proportions.
    pub fn fit(corpus: &[Dialogue]) -> Result<Self> {
        Self::fit_smoothed(corpus, 0.0)
    }

    pub fn fit_smoothed(corpus: &[Dialogue], smoothing: f64) -> Result<Self> {
        let mut prior_counts: CountRow = [0; STRATEGY_COUNT];
        let mut counts = [[[0u64; STRATEGY_COUNT]; STRATEGY_COUNT]; PROGRESS_BUCKETS];
        let mut marginal_counts: CountRow = [0; STRATEGY_COUNT];

        for dialogue in corpus {
            let labels: Vec<StrategyLabel> = dialogue.strategies().collect();
            let total = labels.len();
            for (i, label) in labels.iter().enumerate() {
                marginal_counts[label.index()] += 1;
                if i == 0 {
                    prior_counts[label.index()] += 1;
                } else {
                    let bucket = progress_bucket(i + 1, total);
                    counts[bucket][labels[i - 1].index()][label.index()] += 1;
                }
            }
        }
        if marginal_counts.iter().all(|&c| c == 0) {
            return Err(Error::NoLabeledTurns);
        }
        Ok(Self::from_counts(prior_counts, counts, marginal_counts, smoothing.max(0.0)))
    }

    fn from_counts(
        prior_counts: CountRow,
        counts: [[CountRow; STRATEGY_COUNT]; PROGRESS_BUCKETS],
        marginal_counts: CountRow,
        smoothing: f64,
    ) -> Self {
        let marginal = normalize_counts(&marginal_counts, 0.0).expect("marginal has observations");
        let prior = normalize_counts(&prior_counts, smoothing).unwrap_or(marginal);
        let mut transitions = [[[0.0; STRATEGY_COUNT]; STRATEGY_COUNT]; PROGRESS_BUCKETS];
        let mut fallback = [[false; STRATEGY_COUNT]; PROGRESS_BUCKETS];
        for b in 0..PROGRESS_BUCKETS {
            for prev in 0..STRATEGY_COUNT {
                let row = &counts[b][prev];
                if row.iter().all(|&c| c == 0) {
                    transitions[b][prev] = marginal;
                    fallback[b][prev] = true;
                } else {
                    transitions[b][prev] = normalize_counts(row, smoothing).expect("row has observations");
                }
            }
        }
        Self { prior, transitions, prior_counts, counts, fallback }
    }

    /// Builds a model from explicit probabilities. Rows must be
    /// non-negative and sum to one.
    pub fn from_probabilities(prior: Row, transitions: [[Row; STRATEGY_COUNT]; PROGRESS_BUCKETS]) -> Result<Self> {
        check_row(&prior, "prior")?;
        for (b, bucket) in transitions.iter().enumerate() {
            for (p, row) in bucket.iter().enumerate() {
                check_row(row, &alloc::format!("transitions[{b}][{p}]"))?;
            }
        }
        Ok(Self {
            prior,
            transitions,
            prior_counts: [0; STRATEGY_COUNT],
            counts: [[[0; STRATEGY_COUNT]; STRATEGY_COUNT]; PROGRESS_BUCKETS],
            fallback: [[false; STRATEGY_COUNT]; PROGRESS_BUCKETS],
        })
    }

    pub fn prior(&self) -> &Row {
        &self.prior
    }

    pub fn row(&self, previous: StrategyLabel, bucket: usize) -> &Row {
        &self.transitions[bucket.min(PROGRESS_BUCKETS - 1)][previous.index()]
    }

    pub fn counts(&self, previous: StrategyLabel, bucket: usize) -> &CountRow {
        &self.counts[bucket.min(PROGRESS_BUCKETS - 1)][previous.index()]
    }

    pub fn row_observations(&self, previous: StrategyLabel, bucket: usize) -> u64 {
        self.counts(previous, bucket).iter().sum()
    }

    pub fn is_fallback(&self, previous: StrategyLabel, bucket: usize) -> bool {
        self.fallback[bucket.min(PROGRESS_BUCKETS - 1)][previous.index()]
    }

    /// Distribution for the next supporter turn.
    pub fn distribution(&self, previous: Option<StrategyLabel>, bucket: usize) -> &Row {
        match previous {
            None => &self.prior,
            Some(prev) => self.row(prev, bucket),
        }
    }
}

fn normalize_counts(counts: &CountRow, smoothing: f64) -> Option<Row> {
    let total: f64 = counts.iter().map(|&c| c as f64 + smoothing).sum();
    if counts.iter().all(|&c| c == 0) || total <= 0.0 {
        return None;
    }
    let mut row = [0.0; STRATEGY_COUNT];
    for (slot, &c) in row.iter_mut().zip(counts) {
        *slot = (c as f64 + smoothing) / total;
    }
    Some(row)
}

fn check_row(row: &Row, what: &str) -> Result<()> {
    let sum: f64 = row.iter().sum();
    if row.iter().any(|p| !p.is_finite() || *p < 0.0) || (sum - 1.0).abs() > ROW_TOLERANCE {
        return Err(Error::Invalid(alloc::format!("{what} is not a probability distribution (sum {sum})")));
    }
    Ok(())
}

/// Highest-probability strategy; ties go to the earlier canonical label.
pub fn argmax(row: &Row) -> StrategyLabel {
    let mut best = 0;
    for i in 1..STRATEGY_COUNT {
        if row[i] > row[best] {
            best = i;
        }
    }
    StrategyLabel::ALL[best]
}

/// Draws a strategy from `row`.
pub fn sample<R: Rng + ?Sized>(row: &Row, rng: &mut R) -> StrategyLabel {
    let total: f64 = row.iter().sum();
    let mut target = rng.random::<f64>() * total;
    for (i, p) in row.iter().enumerate() {
        if target < *p {
            return StrategyLabel::ALL[i];
        }
        target -= p;
    }
    // rounding left us past the end: last label with mass
    let last = row.iter().rposition(|p| *p > 0.0).unwrap_or(0);
    StrategyLabel::ALL[last]
}

#[derive(Serialize, Deserialize)]
struct ModelRecord {
    prior: Vec<f64>,
    transitions: Vec<Vec<Vec<f64>>>,
    labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prior_counts: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    counts: Option<Vec<Vec<Vec<u64>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fallback: Option<Vec<Vec<bool>>>,
}

impl Serialize for TransitionModel {
    fn serialize<S: Serializer>(&self, serializer: S) -> core::result::Result<S::Ok, S::Error> {
        let nested_f = |t: &[[Row; STRATEGY_COUNT]; PROGRESS_BUCKETS]| {
            t.iter().map(|b| b.iter().map(|r| r.to_vec()).collect()).collect()
        };
        let nested_c = |t: &[[CountRow; STRATEGY_COUNT]; PROGRESS_BUCKETS]| {
            t.iter().map(|b| b.iter().map(|r| r.to_vec()).collect()).collect()
        };
        ModelRecord {
            prior: self.prior.to_vec(),
            transitions: nested_f(&self.transitions),
            labels: StrategyLabel::ALL.iter().map(|l| String::from(l.as_str())).collect(),
            prior_counts: Some(self.prior_counts.to_vec()),
            counts: Some(nested_c(&self.counts)),
            fallback: Some(self.fallback.iter().map(|b| b.to_vec()).collect()),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TransitionModel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> core::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let record = ModelRecord::deserialize(deserializer)?;
        model_from_record(record).map_err(D::Error::custom)
    }
}

/// Accepts labels in any order and permutes them into canonical order.
fn model_from_record(record: ModelRecord) -> Result<TransitionModel> {
    if record.labels.len() != STRATEGY_COUNT {
        return Err(Error::Invalid(alloc::format!("expected {STRATEGY_COUNT} labels")));
    }
    let mut perm = [0usize; STRATEGY_COUNT];
    let mut seen = [false; STRATEGY_COUNT];
    for (file_idx, name) in record.labels.iter().enumerate() {
        let label: StrategyLabel = name.parse()?;
        if seen[label.index()] {
            return Err(Error::Invalid(alloc::format!("duplicate label {name:?}")));
        }
        seen[label.index()] = true;
        perm[file_idx] = label.index();
    }
    let shape_err = || Error::Invalid(String::from("transitions must be 6 x 8 x 8"));
    let permute = |values: &[f64]| -> Result<Row> {
        if values.len() != STRATEGY_COUNT {
            return Err(shape_err());
        }
        let mut row = [0.0; STRATEGY_COUNT];
        for (i, v) in values.iter().enumerate() {
            row[perm[i]] = *v;
        }
        Ok(row)
    };
    let prior = permute(&record.prior)?;
    if record.transitions.len() != PROGRESS_BUCKETS {
        return Err(shape_err());
    }
    let mut transitions = [[[0.0; STRATEGY_COUNT]; STRATEGY_COUNT]; PROGRESS_BUCKETS];
    for (b, bucket) in record.transitions.iter().enumerate() {
        if bucket.len() != STRATEGY_COUNT {
            return Err(shape_err());
        }
        for (p, row) in bucket.iter().enumerate() {
            transitions[b][perm[p]] = permute(row)?;
        }
    }
    let mut model = TransitionModel::from_probabilities(prior, transitions)?;

    if let Some(pc) = record.prior_counts.filter(|v| v.len() == STRATEGY_COUNT) {
        for (i, c) in pc.iter().enumerate() {
            model.prior_counts[perm[i]] = *c;
        }
    }
    if let Some(counts) = record.counts {
        for (b, bucket) in counts.iter().enumerate().take(PROGRESS_BUCKETS) {
            for (p, row) in bucket.iter().enumerate().take(STRATEGY_COUNT) {
                for (n, c) in row.iter().enumerate().take(STRATEGY_COUNT) {
                    model.counts[b][perm[p]][perm[n]] = *c;
                }
            }
        }
    }
    if let Some(fallback) = record.fallback {
        for (b, bucket) in fallback.iter().enumerate().take(PROGRESS_BUCKETS) {
            for (p, flag) in bucket.iter().enumerate().take(STRATEGY_COUNT) {
                model.fallback[b][perm[p]] = *flag;
            }
        }
    }
    Ok(model)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CounselorMode {
    /// Ask the counselor backend; fall back to the model on backend failure.
    Prompted,
    /// Transition model only.
    Statistical,
    /// Prompted, but an answer that names no strategy defers to the model.
    Hybrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selection {
    #[default]
    Argmax,
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionSource {
    Prompted,
    Statistical,
    /// The prompted path failed and the model answered instead.
    Fallback,
}

/// One counselor decision, logged alongside each supporter turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub strategy: StrategyLabel,
    pub source: DecisionSource,
    /// Raw backend answer in prompted modes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bucket: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Counselor {
    pub mode: CounselorMode,
    pub model: Option<TransitionModel>,
    pub selection: Selection,
    /// Assumed number of supporter turns, used for the live progress bucket.
    pub expected_turns: usize,
}

impl Counselor {
    pub fn statistical(model: TransitionModel, expected_turns: usize) -> Self {
        Self { mode: CounselorMode::Statistical, model: Some(model), selection: Selection::Argmax, expected_turns }
    }

    pub fn prompted(model: Option<TransitionModel>, expected_turns: usize) -> Self {
        Self { mode: CounselorMode::Prompted, model, selection: Selection::Argmax, expected_turns }
    }

    pub fn with_mode(mut self, mode: CounselorMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_selection(mut self, selection: Selection) -> Self {
        self.selection = selection;
        self
    }

    /// Picks the strategy for the supporter reply that follows `history`,
    /// which must end with a seeker utterance.
    pub fn select<R: Rng + ?Sized>(
        &self,
        history: &[Utterance],
        backend: &dyn ChatBackend,
        settings: &RoleSettings,
        rng: &mut R,
    ) -> Result<Decision> {
        match history.last() {
            Some(u) if u.speaker == Speaker::Seeker => {}
            _ => return Err(Error::Invalid(String::from("counselor history must end with a seeker utterance"))),
        }
        match self.mode {
            CounselorMode::Statistical => self.select_statistical(history, rng, DecisionSource::Statistical),
            CounselorMode::Prompted | CounselorMode::Hybrid => match self.ask(history, backend, settings) {
                Ok((raw, Some(strategy))) => Ok(Decision { strategy, source: DecisionSource::Prompted, raw: Some(raw), bucket: None }),
                Ok((raw, None)) => {
                    if self.mode == CounselorMode::Hybrid && self.model.is_some() {
                        let mut d = self.select_statistical(history, rng, DecisionSource::Fallback)?;
                        d.raw = Some(raw);
                        Ok(d)
                    } else {
                        Ok(Decision { strategy: StrategyLabel::Others, source: DecisionSource::Prompted, raw: Some(raw), bucket: None })
                    }
                }
                Err(err) if self.model.is_some() => {
                    log::warn!("prompted counselor failed ({err}); using transition model");
                    self.select_statistical(history, rng, DecisionSource::Fallback)
                }
                Err(err) => Err(err),
            },
        }
    }

    fn ask(&self, history: &[Utterance], backend: &dyn ChatBackend, settings: &RoleSettings) -> Result<(String, Option<StrategyLabel>)> {
        let window = history_window(history, settings.history_window);
        let rendered = render_history(window);
        let options = strategy_menu();
        let raw = settings.ask(backend, RoleTag::Counselor, &[("history", &rendered), ("strategies", &options)])?;
        let parsed = StrategyLabel::recognize(&raw);
        Ok((raw, parsed))
    }

    fn select_statistical<R: Rng + ?Sized>(&self, history: &[Utterance], rng: &mut R, source: DecisionSource) -> Result<Decision> {
        let model = self
            .model
            .as_ref()
            .ok_or_else(|| Error::Invalid(String::from("statistical counselor needs a transition model")))?;
        let previous = history.iter().rev().find(|u| u.speaker == Speaker::Supporter).and_then(|u| u.strategy);
        let done = history.iter().filter(|u| u.speaker == Speaker::Supporter).count();
        let bucket = live_bucket(done, self.expected_turns);
        let row = model.distribution(previous, bucket);
        let strategy = match self.selection {
            Selection::Argmax => argmax(row),
            Selection::Sample => sample(row, rng),
        };
        Ok(Decision { strategy, source, raw: None, bucket: Some(bucket) })
    }
}

/// Numbered list of the eight strategies for the choice prompt.
pub fn strategy_menu() -> String {
    let mut out = String::new();
    for (i, label) in StrategyLabel::ALL.iter().enumerate() {
        let _ = writeln!(out, "{}. {}", i + 1, label);
    }
    out.pop();
    out
}
