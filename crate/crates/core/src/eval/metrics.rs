use std::collections::BTreeSet;

use super::RetrievalResult;
use crate::error::{Error, Result};

/// 1-based rank of the first relevant candidate, if it appears in the ranking.
pub fn first_relevant_rank(result: &RetrievalResult, relevant: &[usize]) -> Option<usize> {
    result
        .ranked
        .iter()
        .position(|h| relevant.contains(&h.candidate))
        .map(|p| p + 1)
}

/// Whether a relevant candidate appears in the top `k`.
pub fn hits_at_k(result: &RetrievalResult, relevant: &[usize], k: usize) -> bool {
    first_relevant_rank(result, relevant).is_some_and(|r| r <= k)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MrrOutcome {
    pub value: f64,
    pub scored: usize,
    pub excluded: usize,
}

/// Mean reciprocal rank of the first true counterpart.
///
/// `relevant[q]` lists the index positions of query `q`'s counterparts. Queries
/// with no counterpart in the index are excluded and counted. A counterpart that
/// falls outside a truncated ranking scores 0.
pub fn mrr(results: &[RetrievalResult], relevant: &[Vec<usize>]) -> Result<MrrOutcome> {
    if results.len() != relevant.len() {
        return Err(Error::Shape(format!(
            "{} results but {} relevance lists",
            results.len(),
            relevant.len()
        )));
    }
    let mut sum = 0.0;
    let mut scored = 0;
    let mut excluded = 0;
    for (res, rel) in results.iter().zip(relevant) {
        if rel.is_empty() {
            excluded += 1;
            continue;
        }
        scored += 1;
        if let Some(r) = first_relevant_rank(res, rel) {
            sum += 1.0 / r as f64;
        }
    }
    if excluded > 0 {
        log::warn!("{excluded} queries have no true counterpart in the index and were excluded");
    }
    if scored == 0 {
        return Err(Error::Param("no query has a true counterpart in the index".into()));
    }
    Ok(MrrOutcome {
        value: sum / scored as f64,
        scored,
        excluded,
    })
}

/// Intersection over union of two code sets.
pub fn iou_relevance(a: &BTreeSet<String>, b: &BTreeSet<String>) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Param("IoU relevance needs non-empty code sets".into()));
    }
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    Ok(inter as f64 / union as f64)
}

/// DCG of the leading `k` gains, with gain (2^rel - 1) / log2(p + 1).
pub fn dcg_at_k(rels: impl IntoIterator<Item = f64>, k: usize) -> f64 {
    rels.into_iter()
        .take(k)
        .enumerate()
        .map(|(i, r)| (r.exp2() - 1.0) / ((i + 2) as f64).log2())
        .sum()
}

/// nDCG@k with the ideal DCG taken at the same cutoff; 0 when the ideal is 0.
///
/// `rels[c]` is the relevance of candidate index `c`.
pub fn ndcg_at_k(result: &RetrievalResult, rels: &[f64], k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::Param("nDCG cutoff k must be at least 1".into()));
    }
    if let Some(bad) = rels.iter().find(|r| !(0.0..=1.0).contains(*r)) {
        return Err(Error::Param(format!("relevance {bad} outside [0, 1]")));
    }
    let mut ideal = rels.to_vec();
    ideal.sort_by(|a, b| b.total_cmp(a));
    let idcg = dcg_at_k(ideal, k);
    if idcg == 0.0 {
        return Ok(0.0);
    }
    let dcg = dcg_at_k(result.ranked.iter().map(|h| rels[h.candidate]), k);
    Ok((dcg / idcg).min(1.0))
}
