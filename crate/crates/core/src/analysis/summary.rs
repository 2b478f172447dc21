use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const HISTOGRAM_BINS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub low: f64,
    pub high: f64,
    pub count: usize,
}

/// Location and spread of a set of similarity values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilaritySummary {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    /// Population standard deviation.
    pub stdev: f64,
    /// Twenty equal bins on `[0, 1]`; the last bin is closed.
    pub histogram: Vec<HistogramBin>,
}

impl SimilaritySummary {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Invalid(alloc::string::String::from("no similarity values to summarize")));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;

        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mid = sorted.len() / 2;
        let median = if sorted.len() % 2 == 0 { (sorted[mid - 1] + sorted[mid]) / 2.0 } else { sorted[mid] };

        let mut counts = vec![0usize; HISTOGRAM_BINS];
        for &v in values {
            let clamped = v.clamp(0.0, 1.0);
            let bin = ((clamped * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1);
            counts[bin] += 1;
        }
        let width = 1.0 / HISTOGRAM_BINS as f64;
        let histogram = counts
            .into_iter()
            .enumerate()
            .map(|(i, count)| HistogramBin { low: i as f64 * width, high: (i + 1) as f64 * width, count })
            .collect();

        Ok(Self { count: values.len(), mean, median, stdev: libm::sqrt(var), histogram })
    }
}
