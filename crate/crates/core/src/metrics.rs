//! Response-level metrics: corpus BLEU, ROUGE-2/ROUGE-L, per-response
//! distinct-n, and Fleiss' kappa for rater agreement.
//!
//! BLEU and distinct-n come out ×100; ROUGE is an F1 in `[0, 1]`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::analysis::ngrams;
use crate::error::{Error, Result};

fn counts(tokens: &[String], n: usize) -> BTreeMap<&[String], usize> {
    let mut map = BTreeMap::new();
    for g in ngrams(tokens, n) {
        *map.entry(g).or_insert(0) += 1;
    }
    map
}

/// Overlap of two n-gram multisets with counts clipped to the reference.
fn clipped_overlap(cand: &BTreeMap<&[String], usize>, reference: &BTreeMap<&[String], usize>) -> usize {
    cand.iter().map(|(g, &c)| c.min(reference.get(g).copied().unwrap_or(0))).sum()
}

fn check_lengths<A, B>(candidates: &[A], references: &[B]) -> Result<()> {
    if candidates.len() != references.len() {
        return Err(Error::LengthMismatch { candidates: candidates.len(), references: references.len() });
    }
    if candidates.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(())
}

/// Corpus BLEU-`n` with uniform weights, one reference per candidate and
/// no smoothing. ×100.
pub fn corpus_bleu(candidates: &[Vec<String>], references: &[Vec<String>], n: usize) -> Result<f64> {
    check_lengths(candidates, references)?;
    if n == 0 {
        return Err(Error::Invalid(String::from("BLEU order must be positive")));
    }
    let mut matched = alloc::vec![0usize; n];
    let mut total = alloc::vec![0usize; n];
    let (mut cand_len, mut ref_len) = (0usize, 0usize);
    for (c, r) in candidates.iter().zip(references) {
        cand_len += c.len();
        ref_len += r.len();
        for k in 1..=n {
            let cc = counts(c, k);
            let rc = counts(r, k);
            matched[k - 1] += clipped_overlap(&cc, &rc);
            total[k - 1] += c.len().saturating_sub(k - 1);
        }
    }
    if matched.iter().zip(&total).any(|(&m, &t)| m == 0 || t == 0) {
        return Ok(0.0);
    }
    let log_mean = matched
        .iter()
        .zip(&total)
        .map(|(&m, &t)| libm::log(m as f64 / t as f64))
        .sum::<f64>()
        / n as f64;
    let bp = if cand_len > ref_len { 1.0 } else { libm::exp(1.0 - ref_len as f64 / cand_len as f64) };
    Ok(100.0 * bp * libm::exp(log_mean))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RougeVariant {
    Rouge2,
    RougeL,
}

fn f1(overlap: usize, cand: usize, reference: usize) -> f64 {
    if overlap == 0 || cand == 0 || reference == 0 {
        return 0.0;
    }
    let p = overlap as f64 / cand as f64;
    let r = overlap as f64 / reference as f64;
    2.0 * p * r / (p + r)
}

/// Longest common subsequence length, O(|a|·|b|) time, O(|b|) space.
pub fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut row = alloc::vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[b.len()]
}

/// ROUGE F1 of one candidate against one reference. Empty input (or no
/// bigrams, for ROUGE-2) scores zero with a warning.
pub fn rouge(candidate: &[String], reference: &[String], variant: RougeVariant) -> f64 {
    match variant {
        RougeVariant::Rouge2 => {
            if candidate.len() < 2 || reference.len() < 2 {
                log::warn!("ROUGE-2 on a sequence without bigrams scores 0");
                return 0.0;
            }
            let overlap = clipped_overlap(&counts(candidate, 2), &counts(reference, 2));
            f1(overlap, candidate.len() - 1, reference.len() - 1)
        }
        RougeVariant::RougeL => {
            if candidate.is_empty() || reference.is_empty() {
                log::warn!("ROUGE-L on an empty sequence scores 0");
                return 0.0;
            }
            f1(lcs_len(candidate, reference), candidate.len(), reference.len())
        }
    }
}

/// Mean ROUGE F1 over aligned pairs.
pub fn corpus_rouge(candidates: &[Vec<String>], references: &[Vec<String>], variant: RougeVariant) -> Result<f64> {
    check_lengths(candidates, references)?;
    let sum: f64 = candidates.iter().zip(references).map(|(c, r)| rouge(c, r, variant)).sum();
    Ok(sum / candidates.len() as f64)
}

/// Distinct-`n` of each response, macro-averaged, ×100. Responses shorter
/// than `n` are skipped with a warning.
pub fn distinct_n_responses(candidates: &[Vec<String>], n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Invalid(String::from("n must be positive")));
    }
    let mut sum = 0.0;
    let mut used = 0usize;
    for c in candidates {
        if c.len() < n {
            continue;
        }
        let grams: Vec<&[String]> = ngrams(c, n).collect();
        let distinct: BTreeSet<&[String]> = grams.iter().copied().collect();
        sum += distinct.len() as f64 / grams.len() as f64;
        used += 1;
    }
    if used == 0 {
        return Err(Error::NoNgrams { n });
    }
    if used < candidates.len() {
        log::warn!("distinct-{n}: skipped {} response(s) shorter than {n} tokens", candidates.len() - used);
    }
    Ok(100.0 * sum / used as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kappa {
    pub kappa: f64,
    /// Expected agreement was 1 (a single category everywhere); kappa is
    /// undefined there and reported as 1.
    pub degenerate: bool,
}

/// Fleiss' kappa over an item × rater matrix of categorical labels. Every
/// item needs the same number of raters, at least two.
pub fn fleiss_kappa<L: Ord>(ratings: &[Vec<L>]) -> Result<Kappa> {
    let first = ratings.first().ok_or(Error::EmptyCorpus)?;
    let raters = first.len();
    if raters < 2 {
        return Err(Error::Invalid(String::from("fleiss kappa needs at least two raters per item")));
    }
    if ratings.iter().any(|row| row.len() != raters) {
        return Err(Error::Invalid(String::from("every item must have the same number of raters")));
    }
    let r = raters as f64;
    let items = ratings.len() as f64;
    let mut category_totals: BTreeMap<&L, usize> = BTreeMap::new();
    let mut p_bar = 0.0;
    for row in ratings {
        let mut per_item: BTreeMap<&L, usize> = BTreeMap::new();
        for label in row {
            *per_item.entry(label).or_insert(0) += 1;
            *category_totals.entry(label).or_insert(0) += 1;
        }
        let sq: usize = per_item.values().map(|c| c * c).sum();
        p_bar += (sq as f64 - r) / (r * (r - 1.0));
    }
    p_bar /= items;
    let p_e: f64 = category_totals
        .values()
        .map(|&c| {
            let p = c as f64 / (items * r);
            p * p
        })
        .sum();
    if (1.0 - p_e).abs() < 1e-12 {
        return Ok(Kappa { kappa: 1.0, degenerate: true });
    }
    Ok(Kappa { kappa: (p_bar - p_e) / (1.0 - p_e), degenerate: false })
}
