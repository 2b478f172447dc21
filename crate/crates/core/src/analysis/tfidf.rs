use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::summary::SimilaritySummary;
use crate::dialogue::Dialogue;
use crate::error::{Error, Result};
use crate::strategy::StrategyLabel;
use crate::text::Tokenizer;

/// Sparse, L2-normalized TF-IDF vector. `terms` is sorted by term id.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TfidfVector {
    pub terms: Vec<(usize, f64)>,
    /// Norm before normalization; zero for a document with no known terms.
    pub norm: f64,
}

impl TfidfVector {
    pub fn weight(&self, term: usize) -> f64 {
        self.terms.binary_search_by_key(&term, |(t, _)| *t).map_or(0.0, |i| self.terms[i].1)
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Vocabulary and smoothed idf, `ln((1 + N) / (1 + df)) + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TfidfModel {
    vocab: BTreeMap<String, usize>,
    idf: Vec<f64>,
    docs: usize,
}

impl TfidfModel {
    /// Fits on tokenized documents. Term ids follow sorted term order.
    pub fn fit(docs: &[Vec<String>]) -> Result<Self> {
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for doc in docs {
            let mut terms: Vec<&str> = doc.iter().map(String::as_str).collect();
            terms.sort_unstable();
            terms.dedup();
            for t in terms {
                *df.entry(t).or_insert(0) += 1;
            }
        }
        if df.is_empty() {
            return Err(Error::EmptyDocuments);
        }
        let n = docs.len() as f64;
        let mut vocab = BTreeMap::new();
        let mut idf = Vec::with_capacity(df.len());
        for (id, (term, count)) in df.into_iter().enumerate() {
            vocab.insert(String::from(term), id);
            idf.push(libm::log((1.0 + n) / (1.0 + count as f64)) + 1.0);
        }
        Ok(Self { vocab, idf, docs: docs.len() })
    }

    pub fn vocabulary(&self) -> &BTreeMap<String, usize> {
        &self.vocab
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn documents(&self) -> usize {
        self.docs
    }

    /// Out-of-vocabulary tokens are ignored.
    pub fn transform(&self, tokens: &[String]) -> TfidfVector {
        let mut tf: BTreeMap<usize, usize> = BTreeMap::new();
        for t in tokens {
            if let Some(&id) = self.vocab.get(t.as_str()) {
                *tf.entry(id).or_insert(0) += 1;
            }
        }
        let mut terms: Vec<(usize, f64)> = tf.into_iter().map(|(id, c)| (id, c as f64 * self.idf[id])).collect();
        let norm = libm::sqrt(terms.iter().map(|(_, w)| w * w).sum::<f64>());
        if norm > 0.0 {
            for (_, w) in &mut terms {
                *w /= norm;
            }
        }
        TfidfVector { terms, norm }
    }
}

/// Fits on `docs` and returns one normalized vector per document.
pub fn tfidf_vectors<S: AsRef<str>>(docs: &[S], tokenizer: &dyn Tokenizer) -> Result<Vec<TfidfVector>> {
    let tokenized: Vec<Vec<String>> = docs.iter().map(|d| tokenizer.tokenize(d.as_ref())).collect();
    let model = TfidfModel::fit(&tokenized)?;
    Ok(tokenized.iter().map(|t| model.transform(t)).collect())
}

/// Cosine of two normalized vectors, clamped to `[0, 1]`.
pub fn cosine(a: &TfidfVector, b: &TfidfVector) -> f64 {
    let (mut i, mut j, mut dot) = (0, 0, 0.0);
    while i < a.terms.len() && j < b.terms.len() {
        let (ta, wa) = a.terms[i];
        let (tb, wb) = b.terms[j];
        match ta.cmp(&tb) {
            core::cmp::Ordering::Less => i += 1,
            core::cmp::Ordering::Greater => j += 1,
            core::cmp::Ordering::Equal => {
                dot += wa * wb;
                i += 1;
                j += 1;
            }
        }
    }
    dot.clamp(0.0, 1.0)
}

fn pair_values(vectors: &[&TfidfVector]) -> Vec<f64> {
    let mut values = Vec::with_capacity(vectors.len() * vectors.len().saturating_sub(1) / 2);
    for (i, a) in vectors.iter().enumerate() {
        for b in &vectors[i + 1..] {
            values.push(cosine(a, b));
        }
    }
    values
}

/// Summary over every unordered pair of distinct vectors.
pub fn pairwise_similarity(vectors: &[TfidfVector]) -> Result<SimilaritySummary> {
    if vectors.len() < 2 {
        return Err(Error::Invalid(String::from("pairwise similarity needs at least two vectors")));
    }
    let refs: Vec<&TfidfVector> = vectors.iter().collect();
    SimilaritySummary::from_values(&pair_values(&refs))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    /// Whole-dialogue texts, one group.
    Global,
    /// Whole-dialogue texts sharing a problem type.
    ByProblemType,
    /// Supporter responses sharing a strategy label.
    ByStrategy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSimilarity {
    pub group: String,
    pub members: usize,
    pub summary: SimilaritySummary,
}

/// Pairwise similarity within groups. Vectors are fitted once over all
/// documents of the grouping's unit, so every group shares one feature
/// space. Groups with fewer than two members are skipped with a warning.
/// Groups come out largest first, ties by name.
pub fn similarity_by_group(corpus: &[Dialogue], grouping: Grouping, tokenizer: &dyn Tokenizer) -> Result<Vec<GroupSimilarity>> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let (keys, docs): (Vec<String>, Vec<String>) = match grouping {
        Grouping::Global => corpus.iter().map(|d| (String::from("all"), d.plain_text())).unzip(),
        Grouping::ByProblemType => corpus.iter().map(|d| (d.problem_type.name.clone(), d.plain_text())).unzip(),
        Grouping::ByStrategy => corpus
            .iter()
            .flat_map(|d| d.supporter_turns())
            .filter_map(|u| u.strategy.map(|s| (String::from(s.as_str()), u.text.clone())))
            .unzip(),
    };
    if docs.is_empty() {
        return Err(Error::NoLabeledTurns);
    }
    let vectors = tfidf_vectors(&docs, tokenizer)?;

    let mut groups: BTreeMap<&str, Vec<&TfidfVector>> = BTreeMap::new();
    for (key, v) in keys.iter().zip(&vectors) {
        groups.entry(key.as_str()).or_default().push(v);
    }
    let mut out = Vec::new();
    for (key, members) in groups {
        if members.len() < 2 {
            log::warn!("similarity group {key:?} has {} member(s); skipped", members.len());
            continue;
        }
        out.push(GroupSimilarity {
            group: String::from(key),
            members: members.len(),
            summary: SimilaritySummary::from_values(&pair_values(&members))?,
        });
    }
    if grouping == Grouping::ByStrategy {
        // canonical label order breaks ties, not alphabetical
        out.sort_by_key(|g| (core::cmp::Reverse(g.members), StrategyLabel::parse_strict(&g.group).map(StrategyLabel::index)));
    } else {
        out.sort_by_key(|g| core::cmp::Reverse(g.members));
    }
    Ok(out)
}

/// Per dialogue, cosine between its scenario and its full text, with one
/// model fitted on the union of both. Dialogues without a scenario are
/// skipped with a warning. Returns `(dialogue id, cosine)` pairs.
pub fn scenario_dialogue_cosines(corpus: &[Dialogue], tokenizer: &dyn Tokenizer) -> Result<Vec<(String, f64)>> {
    let usable: Vec<&Dialogue> = corpus
        .iter()
        .filter(|d| {
            let ok = !d.scenario.trim().is_empty();
            if !ok {
                log::warn!("dialogue {} has no scenario; skipped", d.id);
            }
            ok
        })
        .collect();
    if usable.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut docs: Vec<Vec<String>> = usable.iter().map(|d| tokenizer.tokenize(&d.scenario)).collect();
    docs.extend(usable.iter().map(|d| tokenizer.tokenize(&d.plain_text())));
    let model = TfidfModel::fit(&docs)?;
    let n = usable.len();
    Ok(usable
        .iter()
        .enumerate()
        .map(|(i, d)| (d.id.clone(), cosine(&model.transform(&docs[i]), &model.transform(&docs[n + i]))))
        .collect())
}

pub fn scenario_dialogue_similarity(corpus: &[Dialogue], tokenizer: &dyn Tokenizer) -> Result<SimilaritySummary> {
    let values: Vec<f64> = scenario_dialogue_cosines(corpus, tokenizer)?.into_iter().map(|(_, v)| v).collect();
    SimilaritySummary::from_values(&values)
}
