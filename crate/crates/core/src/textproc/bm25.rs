use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

use super::TokenList;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params<F> {
    /// Term-frequency saturation.
    pub k1: F,
    /// Length normalization.
    pub b: F,
    /// Negative idf values are replaced by `epsilon` times the mean
    /// non-negative idf.
    pub epsilon: F,
}

impl<F: Real> Default for Bm25Params<F> {
    fn default() -> Self {
        Self {
            k1: F::lit(1.5),
            b: F::lit(0.75),
            epsilon: F::lit(0.25),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bm25Index<F> {
    pub doc_count: usize,
    pub avg_doc_len: F,
    pub doc_freq: HashMap<String, usize>,
    pub idf: HashMap<String, F>,
    pub params: Bm25Params<F>,
}

/// Robertson idf `ln((N - df + 0.5) / (df + 0.5))`. Tokens whose idf is
/// negative get `epsilon * mean(idf >= 0)`, or 0 when no token has a
/// non-negative idf.
pub fn bm25_build<F: Real>(docs: &[TokenList], params: Bm25Params<F>) -> Result<Bm25Index<F>> {
    let total_len: usize = docs.iter().map(|d| d.len()).sum();
    if docs.is_empty() || total_len == 0 {
        return Err(Error::EmptyCorpus);
    }
    let mut doc_freq: HashMap<String, usize> = HashMap::new();
    for doc in docs {
        let unique: HashSet<&String> = doc.iter().collect();
        for t in unique {
            *doc_freq.entry(t.clone()).or_insert(0) += 1;
        }
    }

    let n = F::from_count(docs.len());
    let half = F::lit(0.5);
    let mut idf: HashMap<String, F> = doc_freq
        .iter()
        .map(|(t, &df)| {
            let df = F::from_count(df);
            (t.clone(), ((n - df + half) / (df + half)).ln())
        })
        .collect();

    let (sum, count) = idf
        .values()
        .filter(|v| **v >= F::zero())
        .fold((F::zero(), 0usize), |(s, c), &v| (s + v, c + 1));
    let floor = if count == 0 {
        F::zero()
    } else {
        params.epsilon * sum / F::from_count(count)
    };
    for v in idf.values_mut() {
        if *v < F::zero() {
            *v = floor;
        }
    }

    Ok(Bm25Index {
        doc_count: docs.len(),
        avg_doc_len: F::from_count(total_len) / n,
        doc_freq,
        idf,
        params,
    })
}

/// Sum over the unique query tokens of `idf * tf * (k1 + 1) /
/// (tf + k1 * (1 - b + b * |doc| / avgdl))`. Tokens unknown to the index
/// contribute nothing.
pub fn bm25_score<F: Real>(index: &Bm25Index<F>, query: &[String], doc: &[String]) -> F {
    if query.is_empty() || doc.is_empty() {
        return F::zero();
    }
    let mut tf: HashMap<&str, usize> = HashMap::new();
    for t in doc {
        *tf.entry(t.as_str()).or_insert(0) += 1;
    }
    let Bm25Params { k1, b, .. } = index.params;
    let len_norm = F::one() - b + b * F::from_count(doc.len()) / index.avg_doc_len;
    let unique: HashSet<&str> = query.iter().map(String::as_str).collect();
    let mut score = F::zero();
    for t in unique {
        let (Some(&idf), Some(&f)) = (index.idf.get(t), tf.get(t)) else {
            continue;
        };
        let f = F::from_count(f);
        score = score + idf * f * (k1 + F::one()) / (f + k1 * len_norm);
    }
    score
}
