//! Corpus analyses: size statistics, TF-IDF diversity, distinct-n, and
//! strategy usage over conversation progress.

mod distinct;
mod stats;
mod strategies;
mod summary;
mod tfidf;

pub use distinct::{distinct_n_corpus, ngrams};
pub use stats::{corpus_statistics, SpeakerStats, StatsReport};
pub use strategies::{strategy_distribution, strategy_transition, unique_strategy_histogram, TransitionTable};
pub use summary::{HistogramBin, SimilaritySummary, HISTOGRAM_BINS};
pub use tfidf::{
    cosine, pairwise_similarity, scenario_dialogue_cosines, scenario_dialogue_similarity, similarity_by_group, tfidf_vectors, GroupSimilarity,
    Grouping, TfidfModel, TfidfVector,
};
