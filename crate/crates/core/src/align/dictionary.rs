//! Unsupervised dictionary induction and Procrustes refinement.

use super::{project, solve_procrustes};
use crate::error::Result;
use crate::linalg::Matrix;

/// How candidate translation pairs are scored before the mutual
/// nearest-neighbour test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InductionRule {
    /// Plain cosine similarity.
    MutualNn,
    /// Cross-domain similarity local scaling over `k` neighbours:
    /// `2·cos(x, y) − r_Y(x) − r_X(y)`.
    Csls { k: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DictionaryPair {
    /// Column of `X`.
    pub source: usize,
    /// Column of `Y`.
    pub target: usize,
    /// Cosine similarity between `Wᵀx` and `y`.
    pub similarity: f64,
}

/// Induced pairs, sorted by similarity descending.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dictionary {
    pub pairs: Vec<DictionaryPair>,
}

impl Dictionary {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn mean_similarity(&self) -> f64 {
        if self.pairs.is_empty() {
            return 0.0;
        }
        self.pairs.iter().map(|p| p.similarity).sum::<f64>() / self.pairs.len() as f64
    }

    pub fn sources(&self) -> Vec<usize> {
        self.pairs.iter().map(|p| p.source).collect()
    }

    pub fn targets(&self) -> Vec<usize> {
        self.pairs.iter().map(|p| p.target).collect()
    }
}

fn normalized_columns(m: &Matrix) -> Matrix {
    let norms = m.column_norms();
    Matrix::from_fn(m.rows(), m.cols(), |i, j| {
        if norms[j] > 0.0 {
            m[(i, j)] / norms[j]
        } else {
            0.0
        }
    })
}

/// Cosine similarity of every column of `a` against every column of `b`.
pub(crate) fn cosine_matrix(a: &Matrix, b: &Matrix) -> Matrix {
    normalized_columns(a).t_matmul(&normalized_columns(b))
}

fn mean_top_k(values: impl Iterator<Item = f64>, k: usize) -> f64 {
    let mut v: Vec<f64> = values.collect();
    let k = k.min(v.len()).max(1);
    v.select_nth_unstable_by(k - 1, |a, b| b.total_cmp(a));
    v[..k].iter().sum::<f64>() / k as f64
}

/// Argmax with ties resolved toward the lower index.
fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Mutual nearest neighbours between the columns of `WᵀX` and `Y`, at most
/// `size` of them, most similar first.
pub fn induce_dictionary(w: &Matrix, x: &Matrix, y: &Matrix, size: usize, rule: InductionRule) -> Dictionary {
    let cos = cosine_matrix(&project(w, x), y);
    let (n_src, n_tgt) = cos.shape();
    if n_src == 0 || n_tgt == 0 || size == 0 {
        return Dictionary::default();
    }
    let score = match rule {
        InductionRule::MutualNn => cos.clone(),
        InductionRule::Csls { k } => {
            let r_src: Vec<f64> = (0..n_src).map(|i| mean_top_k(cos.row(i).iter().copied(), k)).collect();
            let r_tgt: Vec<f64> = (0..n_tgt)
                .map(|j| mean_top_k((0..n_src).map(|i| cos[(i, j)]), k))
                .collect();
            Matrix::from_fn(n_src, n_tgt, |i, j| 2.0 * cos[(i, j)] - r_src[i] - r_tgt[j])
        }
    };
    let best_tgt: Vec<usize> = (0..n_src).map(|i| argmax(score.row(i).iter().copied())).collect();
    let best_src: Vec<usize> = (0..n_tgt).map(|j| argmax((0..n_src).map(|i| score[(i, j)]))).collect();

    let mut pairs: Vec<DictionaryPair> = best_tgt
        .iter()
        .enumerate()
        .filter(|&(i, &j)| best_src[j] == i)
        .map(|(i, &j)| DictionaryPair {
            source: i,
            target: j,
            similarity: cos[(i, j)],
        })
        .collect();
    pairs.sort_by(|a, b| b.similarity.total_cmp(&a.similarity).then(a.source.cmp(&b.source)));
    pairs.truncate(size);
    Dictionary { pairs }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Refinement {
    pub w: Matrix,
    /// 0 when the starting map was kept.
    pub chosen_round: usize,
    /// Mean induced-dictionary similarity of the start map, then of each round.
    pub history: Vec<f64>,
    /// Set when the very first induced dictionary was empty.
    pub empty_dictionary: bool,
}

impl Refinement {
    pub fn mean_similarity(&self) -> f64 {
        self.history[self.chosen_round]
    }
}

/// Alternates dictionary induction and orthogonal Procrustes for `rounds`
/// rounds, keeping the map whose induced dictionary has the highest mean
/// similarity. Each round re-induces the dictionary from scratch.
pub fn refine(
    w0: &Matrix,
    x: &Matrix,
    y: &Matrix,
    rounds: usize,
    size: usize,
    rule: InductionRule,
) -> Result<Refinement> {
    let start = induce_dictionary(w0, x, y, size, rule);
    let mut out = Refinement {
        w: w0.clone(),
        chosen_round: 0,
        history: vec![start.mean_similarity()],
        empty_dictionary: start.is_empty(),
    };
    if rounds == 0 {
        return Ok(out);
    }
    if start.is_empty() {
        log::warn!("refinement: empty initial dictionary, keeping the starting map");
        return Ok(out);
    }
    let mut dict = start;
    for round in 1..=rounds {
        let xs = x.select_columns(&dict.sources());
        let ys = y.select_columns(&dict.targets());
        let w = solve_procrustes(&xs, &ys)?;
        dict = induce_dictionary(&w, x, y, size, rule);
        let sim = dict.mean_similarity();
        out.history.push(sim);
        if sim > out.history[out.chosen_round] {
            out.chosen_round = round;
            out.w = w;
        }
        if dict.is_empty() {
            break;
        }
    }
    Ok(out)
}
