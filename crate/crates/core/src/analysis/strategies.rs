use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::counselor::{progress_bucket, PROGRESS_BUCKETS};
use crate::dialogue::Dialogue;
use crate::error::{Error, Result};
use crate::strategy::{StrategyLabel, STRATEGY_COUNT};

/// Share of each strategy over all labeled supporter turns. Every label
/// is present, zero or not.
pub fn strategy_distribution(corpus: &[Dialogue]) -> Result<BTreeMap<StrategyLabel, f64>> {
    let mut counts = [0usize; STRATEGY_COUNT];
    for s in corpus.iter().flat_map(Dialogue::strategies) {
        counts[s.index()] += 1;
    }
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(Error::NoLabeledTurns);
    }
    Ok(StrategyLabel::ALL.iter().map(|&l| (l, counts[l.index()] as f64 / total as f64)).collect())
}

/// Strategy shares within each of the six progress buckets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionTable {
    pub rows: [[f64; STRATEGY_COUNT]; PROGRESS_BUCKETS],
    pub counts: [[usize; STRATEGY_COUNT]; PROGRESS_BUCKETS],
    /// Buckets with no turns; their row is all zeros.
    pub empty: [bool; PROGRESS_BUCKETS],
}

impl TransitionTable {
    pub fn share(&self, bucket: usize, label: StrategyLabel) -> f64 {
        self.rows[bucket][label.index()]
    }

    /// `bucket,<label>...,empty` header then one row per bucket.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bucket");
        for l in StrategyLabel::ALL {
            out.push(',');
            out.push_str(l.as_str());
        }
        out.push_str(",empty\n");
        for (b, row) in self.rows.iter().enumerate() {
            let _ = write!(out, "{b}");
            for v in row {
                let _ = write!(out, ",{v}");
            }
            let _ = writeln!(out, ",{}", self.empty[b]);
        }
        out
    }
}

pub fn strategy_transition(corpus: &[Dialogue]) -> Result<TransitionTable> {
    let mut counts = [[0usize; STRATEGY_COUNT]; PROGRESS_BUCKETS];
    for d in corpus {
        let labels: Vec<StrategyLabel> = d.strategies().collect();
        for (i, l) in labels.iter().enumerate() {
            counts[progress_bucket(i + 1, labels.len())][l.index()] += 1;
        }
    }
    if counts.iter().flatten().all(|&c| c == 0) {
        return Err(Error::NoLabeledTurns);
    }
    let mut rows = [[0.0; STRATEGY_COUNT]; PROGRESS_BUCKETS];
    let mut empty = [false; PROGRESS_BUCKETS];
    for b in 0..PROGRESS_BUCKETS {
        let total: usize = counts[b].iter().sum();
        if total == 0 {
            log::warn!("progress bucket {b} has no supporter turns");
            empty[b] = true;
            continue;
        }
        for s in 0..STRATEGY_COUNT {
            rows[b][s] = counts[b][s] as f64 / total as f64;
        }
    }
    Ok(TransitionTable { rows, counts, empty })
}

/// Number of dialogues using exactly `k` distinct strategies.
pub fn unique_strategy_histogram(corpus: &[Dialogue]) -> BTreeMap<usize, usize> {
    let mut hist = BTreeMap::new();
    for d in corpus {
        let mut seen = [false; STRATEGY_COUNT];
        for s in d.strategies() {
            seen[s.index()] = true;
        }
        *hist.entry(seen.iter().filter(|&&x| x).count()).or_insert(0) += 1;
    }
    hist
}
