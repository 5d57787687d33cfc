use super::{aggregate_ci, ndcg_at_k, Direction, Hit, MetricReport, RetrievalResult};
use crate::error::{Error, Result};
use crate::rng::{streams, RngState};

/// Expected MRR of a uniformly random ranking with one true item: H_N / N.
pub fn expected_random_mrr(population: usize) -> f64 {
    let h: f64 = (1..=population).rev().map(|i| 1.0 / i as f64).sum();
    h / population as f64
}

/// Monte-Carlo MRR of uniformly random rankings over `population` candidates,
/// one true counterpart per query, `queries` queries per seed.
pub fn chance_mrr(population: usize, queries: usize, seeds: &[u64]) -> Result<MetricReport> {
    if population == 0 || queries == 0 {
        return Err(Error::Param("chance MRR needs a non-empty population and query count".into()));
    }
    let per_seed: Vec<f64> = seeds
        .iter()
        .map(|&s| {
            let mut rng = RngState::with_stream(s, streams::MONTE_CARLO);
            let sum: f64 = (0..queries).map(|_| 1.0 / (rng.index(population) + 1) as f64).sum();
            sum / queries as f64
        })
        .collect();
    aggregate_ci("mrr_chance", &per_seed)
}

/// Monte-Carlo nDCG@k of uniformly random rankings; `relevances[q]` holds the
/// per-candidate relevance of query `q`.
pub fn chance_ndcg(relevances: &[Vec<f64>], k: usize, seeds: &[u64]) -> Result<MetricReport> {
    if relevances.is_empty() {
        return Err(Error::Param("chance nDCG needs at least one query".into()));
    }
    let mut per_seed = Vec::with_capacity(seeds.len());
    for &s in seeds {
        let mut rng = RngState::with_stream(s, streams::MONTE_CARLO);
        let mut sum = 0.0;
        for rels in relevances {
            let ranked = rng
                .permutation(rels.len())
                .into_iter()
                .map(|candidate| Hit { candidate, score: 0.0 })
                .collect();
            let res = RetrievalResult {
                query_id: String::new(),
                direction: Direction::TextToImage,
                ranked,
            };
            sum += ndcg_at_k(&res, rels, k)?;
        }
        per_seed.push(sum / relevances.len() as f64);
    }
    Ok(aggregate_ci("ndcg_chance", &per_seed)?.with_k(k))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn analytic_matches_enumeration() {
        let perms = permutations(4);
        assert_eq!(perms.len(), 24);
        let exhaustive: f64 = perms
            .iter()
            .map(|p| 1.0 / (p.iter().position(|&c| c == 0).unwrap() + 1) as f64)
            .sum::<f64>()
            / 24.0;
        assert!((expected_random_mrr(4) - exhaustive).abs() < 1e-15);
        assert!((expected_random_mrr(4) - 0.5208).abs() < 1e-4);
    }

    #[test]
    fn monte_carlo_close_to_analytic() {
        let r = chance_mrr(4, 20000, &[1, 2, 3, 4, 5]).unwrap();
        assert!((r.mean - expected_random_mrr(4)).abs() < 0.01);
    }

    #[test]
    fn equal_relevances_give_one() {
        let rels = vec![vec![0.4; 6]; 3];
        let r = chance_ndcg(&rels, 3, &[1, 2]).unwrap();
        assert!(r.per_seed.iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn deterministic_per_seed() {
        let a = chance_mrr(100, 50, &[9, 10]).unwrap();
        let b = chance_mrr(100, 50, &[9, 10]).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.per_seed[0], a.per_seed[1]);
    }
}
