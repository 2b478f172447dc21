use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Contiguous `n`-grams of a token sequence.
pub fn ngrams(tokens: &[String], n: usize) -> impl Iterator<Item = &[String]> {
    let n = n.max(1);
    tokens.windows(n)
}

/// Distinct `n`-grams over total `n`-grams across a corpus of tokenized
/// documents. N-grams never span two documents.
pub fn distinct_n_corpus(docs: &[Vec<String>], n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Invalid(String::from("n must be positive")));
    }
    let mut seen: BTreeSet<&[String]> = BTreeSet::new();
    let mut total = 0usize;
    for doc in docs {
        for gram in ngrams(doc, n) {
            total += 1;
            seen.insert(gram);
        }
    }
    if total == 0 {
        return Err(Error::NoNgrams { n });
    }
    Ok(seen.len() as f64 / total as f64)
}
