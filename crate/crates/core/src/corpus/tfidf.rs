use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TfidfConfig {
    /// Exact n-gram length, 1 to 3.
    pub ngram_order: usize,
    /// Minimum number of documents an n-gram must occur in.
    pub min_df: usize,
    pub l2_norm: bool,
}

impl TfidfConfig {
    /// Defaults: `min_df` 1 for unigrams and 2 for longer n-grams, L2 on.
    pub fn new(ngram_order: usize) -> Self {
        TfidfConfig {
            ngram_order,
            min_df: if ngram_order >= 2 { 2 } else { 1 },
            l2_norm: true,
        }
    }
}

/// Sparse vector with strictly increasing indices.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseVector {
    pub dim: usize,
    pub entries: Vec<(usize, f64)>,
}

impl SparseVector {
    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for &(i, v) in &self.entries {
            out[i] = v;
        }
        out
    }
}

/// Smoothed TF-IDF over n-grams of a single order.
///
/// `idf(t) = ln((1 + N) / (1 + df(t))) + 1`, term frequency is the raw count.
#[derive(Clone, Debug, PartialEq)]
pub struct TfidfModel {
    config: TfidfConfig,
    vocabulary: BTreeMap<String, usize>,
    idf: Vec<f64>,
}

fn ngrams(tokens: &[String], n: usize) -> impl Iterator<Item = String> + '_ {
    tokens.windows(n).map(|w| w.join(" "))
}

pub fn fit_tfidf(docs: &[Vec<String>], config: TfidfConfig) -> Result<TfidfModel> {
    if !(1..=3).contains(&config.ngram_order) {
        return Err(Error::Param(format!(
            "n-gram order must be 1..=3, got {}",
            config.ngram_order
        )));
    }
    if docs.iter().all(Vec::is_empty) {
        return Err(Error::Param("TF-IDF needs at least one non-empty document".into()));
    }
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for doc in docs {
        let unique: BTreeSet<String> = ngrams(doc, config.ngram_order).collect();
        for g in unique {
            *df.entry(g).or_default() += 1;
        }
    }
    let n = docs.len() as f64;
    let mut vocabulary = BTreeMap::new();
    let mut idf = Vec::new();
    for (gram, count) in df {
        if count >= config.min_df.max(1) {
            vocabulary.insert(gram, idf.len());
            idf.push(((1.0 + n) / (1.0 + count as f64)).ln() + 1.0);
        }
    }
    if vocabulary.is_empty() {
        return Err(Error::Param(format!(
            "no {}-gram occurs in at least {} documents",
            config.ngram_order, config.min_df
        )));
    }
    Ok(TfidfModel {
        config,
        vocabulary,
        idf,
    })
}

impl TfidfModel {
    pub fn config(&self) -> TfidfConfig {
        self.config
    }

    pub fn vocabulary_size(&self) -> usize {
        self.idf.len()
    }

    /// Column of an n-gram (tokens joined by single spaces).
    pub fn column(&self, gram: &str) -> Option<usize> {
        self.vocabulary.get(gram).copied()
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn vocabulary(&self) -> impl Iterator<Item = (&str, usize)> {
        self.vocabulary.iter().map(|(g, &i)| (g.as_str(), i))
    }

    /// Out-of-vocabulary n-grams are dropped; a document without any known
    /// n-gram maps to the zero vector.
    pub fn transform(&self, doc: &[String]) -> SparseVector {
        let mut counts: HashMap<usize, usize> = HashMap::new();
        for g in ngrams(doc, self.config.ngram_order) {
            if let Some(&col) = self.vocabulary.get(&g) {
                *counts.entry(col).or_default() += 1;
            }
        }
        let mut entries: Vec<(usize, f64)> = counts
            .into_iter()
            .map(|(col, tf)| (col, tf as f64 * self.idf[col]))
            .collect();
        entries.sort_by_key(|&(c, _)| c);
        let mut v = SparseVector {
            dim: self.idf.len(),
            entries,
        };
        if self.config.l2_norm {
            let norm = v.norm();
            if norm > 0.0 {
                for (_, x) in &mut v.entries {
                    *x /= norm;
                }
            }
        }
        v
    }

    pub fn transform_dense(&self, docs: &[Vec<String>]) -> Matrix {
        let mut m = Matrix::zeros(docs.len(), self.idf.len());
        for (i, doc) in docs.iter().enumerate() {
            for (col, v) in self.transform(doc).entries {
                m[(i, col)] = v;
            }
        }
        m
    }
}
