use std::collections::HashMap;

use super::{cosine, first_relevant_rank, ndcg_at_k, retrieve, Direction, RetrievalIndex};
use crate::data::LabelSet;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// IoU relevance between queries and candidates, with codes interned to integers.
#[derive(Clone, Debug)]
pub struct Relevance {
    queries: Vec<Vec<u32>>,
    candidates: Vec<Vec<u32>>,
}

impl Relevance {
    pub fn from_labels(labels: &LabelSet, query_ids: &[String], candidate_ids: &[String]) -> Result<Self> {
        let mut codes: HashMap<&str, u32> = HashMap::new();
        let mut intern = |id: &str| -> Result<Vec<u32>> {
            let set = labels
                .get(id)
                .ok_or_else(|| Error::Param(format!("no labels for id `{id}`")))?;
            if set.is_empty() {
                return Err(Error::Param(format!("empty code set for id `{id}`")));
            }
            let mut v: Vec<u32> = set
                .iter()
                .map(|c| {
                    let next = codes.len() as u32;
                    *codes.entry(c.as_str()).or_insert(next)
                })
                .collect();
            v.sort_unstable();
            Ok(v)
        };
        let queries = query_ids.iter().map(|id| intern(id)).collect::<Result<_>>()?;
        let candidates = candidate_ids.iter().map(|id| intern(id)).collect::<Result<_>>()?;
        Ok(Relevance { queries, candidates })
    }

    /// Relevance of every candidate to query `q`.
    pub fn row(&self, q: usize) -> Vec<f64> {
        let a = &self.queries[q];
        self.candidates.iter().map(|b| sorted_iou(a, b)).collect()
    }
}

fn sorted_iou(a: &[u32], b: &[u32]) -> f64 {
    let (mut i, mut j, mut inter) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    inter as f64 / (a.len() + b.len() - inter) as f64
}

/// Retrieval metrics for one direction over a query set.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionMetrics {
    pub direction: Direction,
    pub mrr: f64,
    pub precision_at_1: f64,
    pub scored: usize,
    pub excluded: usize,
    /// (k, mean nDCG@k); empty when no relevance was given.
    pub ndcg: Vec<(usize, f64)>,
}

/// Ranks the full index for every query row and scores MRR, P@1 and nDCG@k.
///
/// `relevant[q]` lists index positions of the true counterparts of query `q`.
pub fn evaluate_direction(
    query_ids: &[String],
    queries: &Matrix,
    index: &RetrievalIndex,
    relevant: &[Vec<usize>],
    relevance: Option<&Relevance>,
    ks: &[usize],
    direction: Direction,
) -> Result<DirectionMetrics> {
    if index.is_empty() {
        return Err(Error::Param("retrieval index is empty".into()));
    }
    if queries.rows() != query_ids.len() || relevant.len() != query_ids.len() {
        return Err(Error::Shape("query ids, vectors and counterparts differ in length".into()));
    }
    let mut rr_sum = 0.0;
    let mut p1 = 0.0;
    let mut scored = 0usize;
    let mut ndcg_sum = vec![0.0; ks.len()];
    for (q, id) in query_ids.iter().enumerate() {
        let res = retrieve(id, queries.row(q), index, None, direction);
        if let Some(rel) = relevance {
            let row = rel.row(q);
            for (s, &k) in ndcg_sum.iter_mut().zip(ks) {
                *s += ndcg_at_k(&res, &row, k)?;
            }
        }
        if relevant[q].is_empty() {
            continue;
        }
        scored += 1;
        if let Some(r) = first_relevant_rank(&res, &relevant[q]) {
            rr_sum += 1.0 / r as f64;
            if r == 1 {
                p1 += 1.0;
            }
        }
    }
    let excluded = query_ids.len() - scored;
    if excluded > 0 {
        log::warn!("{direction}: {excluded} queries have no true counterpart in the index and were excluded");
    }
    if scored == 0 {
        return Err(Error::Param(format!("{direction}: no query has a true counterpart in the index")));
    }
    let ndcg = match relevance {
        Some(_) => ks
            .iter()
            .zip(&ndcg_sum)
            .map(|(&k, s)| (k, s / query_ids.len() as f64))
            .collect(),
        None => Vec::new(),
    };
    Ok(DirectionMetrics {
        direction,
        mrr: rr_sum / scored as f64,
        precision_at_1: p1 / scored as f64,
        scored,
        excluded,
        ndcg,
    })
}

/// Mean cosine between matched rows of two matrices.
pub fn mean_pair_cosine(a: &Matrix, b: &Matrix, pairs: &[(usize, usize)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Param("no pairs to average cosine over".into()));
    }
    let sum: f64 = pairs.iter().map(|&(i, j)| cosine(a.row(i), b.row(j))).sum();
    Ok(sum / pairs.len() as f64)
}

/// Index positions of true counterparts, from (query row, candidate row) pairs.
pub fn counterpart_lists(n_queries: usize, pairs: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); n_queries];
    for &(q, c) in pairs {
        out[q].push(c);
    }
    out
}
