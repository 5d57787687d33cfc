//! Cross-modal retrieval and its evaluation metrics.

mod chance;
mod evaluate;
mod metrics;
mod stats;

use std::fmt;
use std::str::FromStr;

pub use chance::{chance_mrr, chance_ndcg, expected_random_mrr};
pub use evaluate::{counterpart_lists, evaluate_direction, mean_pair_cosine, DirectionMetrics, Relevance};
pub use metrics::{dcg_at_k, first_relevant_rank, hits_at_k, iou_relevance, mrr, ndcg_at_k, MrrOutcome};
pub use stats::{aggregate_ci, MetricReport};

use crate::data::{EmbeddingSet, Modality};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm, Matrix};

/// Retrieval direction: text queries against images, or the reverse.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    TextToImage,
    ImageToText,
}

impl Direction {
    pub const BOTH: [Direction; 2] = [Direction::TextToImage, Direction::ImageToText];

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::TextToImage => "t2i",
            Direction::ImageToText => "i2t",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "t2i" => Ok(Direction::TextToImage),
            "i2t" => Ok(Direction::ImageToText),
            other => Err(Error::Param(format!("unknown direction `{other}` (expected t2i or i2t)"))),
        }
    }
}

/// Cosine similarity; defined as 0 when either vector is zero.
pub fn cosine(u: &[f64], v: &[f64]) -> f64 {
    let nu = norm(u);
    let nv = norm(v);
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    (dot(u, v) / (nu * nv)).clamp(-1.0, 1.0)
}

/// Candidates for exact cosine search, with cached norms.
#[derive(Clone, Debug)]
pub struct RetrievalIndex {
    ids: Vec<String>,
    vectors: Matrix,
    norms: Vec<f64>,
    modality: Modality,
}

impl RetrievalIndex {
    pub fn new(ids: Vec<String>, vectors: Matrix, modality: Modality) -> Result<Self> {
        if ids.len() != vectors.rows() {
            return Err(Error::Shape(format!("{} ids for {} vectors", ids.len(), vectors.rows())));
        }
        let norms = vectors.row_norms();
        let zero = norms.iter().filter(|&&n| n == 0.0).count();
        if zero > 0 {
            log::warn!("retrieval index has {zero} zero-norm candidates; their cosine is 0");
        }
        Ok(RetrievalIndex {
            ids,
            vectors,
            norms,
            modality,
        })
    }

    pub fn from_set(set: &EmbeddingSet) -> Result<Self> {
        Self::new(set.ids().to_vec(), set.vectors().clone(), set.modality())
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, candidate: usize) -> &str {
        &self.ids[candidate]
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn zero_norm_count(&self) -> usize {
        self.norms.iter().filter(|&&n| n == 0.0).count()
    }

    /// Cosine of `query` against every candidate.
    pub fn scores(&self, query: &[f64]) -> Vec<f64> {
        let qn = norm(query);
        (0..self.len())
            .map(|i| {
                let denom = qn * self.norms[i];
                if denom == 0.0 {
                    0.0
                } else {
                    (dot(query, self.vectors.row(i)) / denom).clamp(-1.0, 1.0)
                }
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hit {
    pub candidate: usize,
    pub score: f64,
}

/// Ranked candidates for one query, best first.
#[derive(Clone, Debug, PartialEq)]
pub struct RetrievalResult {
    pub query_id: String,
    pub direction: Direction,
    pub ranked: Vec<Hit>,
}

/// Orders scores descending, ties to the lower candidate index.
pub fn rank_scores(scores: &[f64], k: Option<usize>) -> Vec<Hit> {
    let mut hits: Vec<Hit> = scores
        .iter()
        .enumerate()
        .map(|(candidate, &score)| Hit { candidate, score })
        .collect();
    let cmp = |a: &Hit, b: &Hit| b.score.total_cmp(&a.score).then(a.candidate.cmp(&b.candidate));
    match k {
        Some(k) if k < hits.len() => {
            if k > 0 {
                hits.select_nth_unstable_by(k - 1, cmp);
            }
            hits.truncate(k);
            hits.sort_by(cmp);
        }
        _ => hits.sort_by(cmp),
    }
    hits
}

/// Exact cosine retrieval; `k = None` ranks the whole index.
pub fn retrieve(query_id: &str, query: &[f64], index: &RetrievalIndex, k: Option<usize>, direction: Direction) -> RetrievalResult {
    RetrievalResult {
        query_id: query_id.to_string(),
        direction,
        ranked: rank_scores(&index.scores(query), k),
    }
}
