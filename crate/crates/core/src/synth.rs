//! Paired two-modality data with a known ground-truth map.

use std::fmt;
use std::str::FromStr;

use crate::align::fit_ea_closed;
use crate::data::{EmbeddingSet, LabelSet, Modality, PairSet};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::{streams, RngState};

const KMEANS_ITERATIONS: usize = 25;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GroundTruth {
    LinearRandom,
    Orthogonal,
    PermutedIdentity,
}

impl GroundTruth {
    pub fn as_str(self) -> &'static str {
        match self {
            GroundTruth::LinearRandom => "linear-random",
            GroundTruth::Orthogonal => "orthogonal",
            GroundTruth::PermutedIdentity => "permuted-identity",
        }
    }
}

impl fmt::Display for GroundTruth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GroundTruth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear-random" => Ok(GroundTruth::LinearRandom),
            "orthogonal" => Ok(GroundTruth::Orthogonal),
            "permuted-identity" => Ok(GroundTruth::PermutedIdentity),
            other => Err(Error::Config(format!(
                "ground_truth: unknown value `{other}` (expected linear-random, orthogonal or permuted-identity)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub n_train: usize,
    pub n_test: usize,
    pub latent_dim: usize,
    pub text_dim: usize,
    pub image_dim: usize,
    pub noise_sigma: f64,
    pub ground_truth: GroundTruth,
    pub n_code_clusters: usize,
    pub codes_per_cluster: usize,
    pub seed: u64,
    /// Latent axis j is scaled by `spectrum_decay^j`; 1.0 keeps z standard normal.
    pub spectrum_decay: f64,
    /// Number of Gaussian blobs in the latent; 0 draws z from a single Gaussian.
    pub latent_clusters: usize,
    /// Standard deviation of blob centres relative to the unit within-blob spread.
    pub cluster_spread: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_train: 2000,
            n_test: 500,
            latent_dim: 64,
            text_dim: 64,
            image_dim: 64,
            noise_sigma: 0.01,
            ground_truth: GroundTruth::LinearRandom,
            n_code_clusters: 20,
            codes_per_cluster: 4,
            seed: 0,
            spectrum_decay: 1.0,
            latent_clusters: 0,
            cluster_spread: 3.0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: &str| Err(Error::Config(format!("{key}: {msg}")));
        if self.n_train == 0 {
            return bad("n_train", "must be at least 1");
        }
        for (key, v) in [
            ("latent_dim", self.latent_dim),
            ("text_dim", self.text_dim),
            ("image_dim", self.image_dim),
            ("n_code_clusters", self.n_code_clusters),
            ("codes_per_cluster", self.codes_per_cluster),
        ] {
            if v == 0 {
                return bad(key, "must be at least 1");
            }
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad("noise_sigma", "must be finite and non-negative");
        }
        if !(self.spectrum_decay > 0.0 && self.spectrum_decay <= 1.0) {
            return bad("spectrum_decay", "must lie in (0, 1]");
        }
        if !(self.cluster_spread >= 0.0 && self.cluster_spread.is_finite()) {
            return bad("cluster_spread", "must be finite and non-negative");
        }
        if self.n_code_clusters > self.n_train + self.n_test {
            return bad("n_code_clusters", "exceeds the number of items");
        }
        if self.ground_truth != GroundTruth::LinearRandom
            && (self.text_dim != self.latent_dim || self.image_dim != self.latent_dim)
        {
            return bad(
                "ground_truth",
                &format!("{} needs text_dim = image_dim = latent_dim", self.ground_truth),
            );
        }
        Ok(())
    }
}

/// A generated train/test split with its true pairing, labels and W*.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthDataset {
    pub train_text: EmbeddingSet,
    pub train_image: EmbeddingSet,
    pub train_pairs: PairSet,
    pub test_text: EmbeddingSet,
    pub test_image: EmbeddingSet,
    pub test_pairs: PairSet,
    pub labels: LabelSet,
    /// `text_dim × image_dim`, with `W*ᵀ x = y` on noiseless data.
    pub w_star: Matrix,
    /// Latent k-means cluster of every item, train then test.
    pub clusters: Vec<usize>,
}

fn text_id(i: usize) -> String {
    format!("t{i:06}")
}

fn image_id(i: usize) -> String {
    format!("i{i:06}")
}

/// Draws latent rows (n × latent_dim).
fn sample_latent(cfg: &SynthConfig, rng: &mut RngState) -> Matrix {
    let n = cfg.n_train + cfg.n_test;
    let d = cfg.latent_dim;
    let mut z = rng.normal_matrix(n, d);
    if cfg.latent_clusters > 0 {
        let centres = rng.normal_matrix(cfg.latent_clusters, d).scale(cfg.cluster_spread);
        for i in 0..n {
            let c = rng.index(cfg.latent_clusters);
            let row = z.row_mut(i);
            for (v, m) in row.iter_mut().zip(centres.row(c)) {
                *v += m;
            }
        }
        // unit variance per axis on average
        let s = (1.0 + cfg.cluster_spread * cfg.cluster_spread).sqrt();
        z = z.scale(1.0 / s);
    }
    if cfg.spectrum_decay != 1.0 {
        for i in 0..n {
            let mut f = 1.0;
            for v in z.row_mut(i) {
                *v *= f;
                f *= cfg.spectrum_decay;
            }
        }
    }
    z
}

fn permutation_matrix(perm: &[usize]) -> Matrix {
    let d = perm.len();
    Matrix::from_fn(d, d, |r, c| if perm[c] == r { 1.0 } else { 0.0 })
}

/// Lloyd's k-means with a fixed iteration count, seeded from distinct rows.
fn kmeans(z: &Matrix, k: usize, rng: &mut RngState) -> Vec<usize> {
    let n = z.rows();
    let start = rng.permutation(n);
    let mut centres = z.select_rows(&start[..k]);
    let mut assign = vec![0usize; n];
    for _ in 0..KMEANS_ITERATIONS {
        for (i, a) in assign.iter_mut().enumerate() {
            let row = z.row(i);
            let mut best = (f64::INFINITY, 0);
            for c in 0..k {
                let d: f64 = row.iter().zip(centres.row(c)).map(|(x, m)| (x - m) * (x - m)).sum();
                if d < best.0 {
                    best = (d, c);
                }
            }
            *a = best.1;
        }
        let mut sums = Matrix::zeros(k, z.cols());
        let mut counts = vec![0usize; k];
        for (i, &a) in assign.iter().enumerate() {
            counts[a] += 1;
            for (s, x) in sums.row_mut(a).iter_mut().zip(z.row(i)) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                let inv = 1.0 / counts[c] as f64;
                for (m, s) in centres.row_mut(c).iter_mut().zip(sums.row(c)) {
                    *m = s * inv;
                }
            }
        }
    }
    assign
}

fn code(cluster: usize, j: usize) -> String {
    format!("{}.{j}", 400 + cluster)
}

/// Generates a dataset as a pure function of the config.
pub fn generate(cfg: &SynthConfig) -> Result<SynthDataset> {
    cfg.validate()?;
    let mut rng = RngState::with_stream(cfg.seed, streams::DATA);
    let n = cfg.n_train + cfg.n_test;
    let z = sample_latent(cfg, &mut rng);

    // row-major maps: y = z Aᵀ, x = z Bᵀ
    let (a, b) = match cfg.ground_truth {
        GroundTruth::LinearRandom => {
            let s = 1.0 / (cfg.latent_dim as f64).sqrt();
            (
                rng.normal_matrix(cfg.image_dim, cfg.latent_dim).scale(s),
                rng.normal_matrix(cfg.text_dim, cfg.latent_dim).scale(s),
            )
        }
        GroundTruth::Orthogonal => {
            let a = rng.orthogonal_matrix(cfg.latent_dim);
            let q = rng.orthogonal_matrix(cfg.latent_dim);
            let b = q.matmul(&a);
            (a, b)
        }
        GroundTruth::PermutedIdentity => {
            let p = permutation_matrix(&rng.permutation(cfg.latent_dim));
            (Matrix::identity(cfg.latent_dim), p)
        }
    };
    let clean_y = z.matmul_t(&a);
    let clean_x = z.matmul_t(&b);

    let w_star = match cfg.ground_truth {
        // x = B z and y = A z with B orthogonal, so Wᵀ = A Bᵀ
        GroundTruth::Orthogonal | GroundTruth::PermutedIdentity => b.matmul_t(&a),
        GroundTruth::LinearRandom => {
            let train: Vec<usize> = (0..cfg.n_train).collect();
            let x = clean_x.select_rows(&train).transpose();
            let y = clean_y.select_rows(&train).transpose();
            fit_ea_closed(&x, &y)?.w
        }
    };

    let mut noisy = |m: &Matrix| {
        if cfg.noise_sigma == 0.0 {
            return m.clone();
        }
        let e = rng.normal_matrix(m.rows(), m.cols()).scale(cfg.noise_sigma);
        m + &e
    };
    let x = noisy(&clean_x);
    let y = noisy(&clean_y);

    let clusters = kmeans(&z, cfg.n_code_clusters, &mut rng);
    let mut labels = LabelSet::new();
    let image_perm = rng.permutation(n);
    for i in 0..n {
        let c = clusters[i];
        let mut codes = vec![code(c, 0)];
        for j in 1..cfg.codes_per_cluster {
            if rng.uniform(0.0, 1.0) < 0.5 {
                codes.push(code(c, j));
            }
        }
        if cfg.n_code_clusters > 1 && rng.uniform(0.0, 1.0) < 0.3 {
            let other = (c + 1 + rng.index(cfg.n_code_clusters - 1)) % cfg.n_code_clusters;
            codes.push(code(other, rng.index(cfg.codes_per_cluster)));
        }
        labels.insert(text_id(i), codes.clone());
        labels.insert(image_id(image_perm[i]), codes);
    }

    let split = |range: std::ops::Range<usize>| -> Result<(EmbeddingSet, EmbeddingSet, PairSet)> {
        let rows: Vec<usize> = range.clone().collect();
        let text = EmbeddingSet::new(rows.iter().map(|&i| text_id(i)).collect(), x.select_rows(&rows), Modality::Text)?;
        // image rows ordered by their (shuffled) id
        let mut by_id: Vec<usize> = rows.clone();
        by_id.sort_by_key(|&i| image_perm[i]);
        let image = EmbeddingSet::new(
            by_id.iter().map(|&i| image_id(image_perm[i])).collect(),
            y.select_rows(&by_id),
            Modality::Image,
        )?;
        let pairs = rows.iter().map(|&i| (text_id(i), image_id(image_perm[i]))).collect();
        Ok((text, image, pairs))
    };
    let (train_text, train_image, train_pairs) = split(0..cfg.n_train)?;
    let (test_text, test_image, test_pairs) = split(cfg.n_train..n)?;

    Ok(SynthDataset {
        train_text,
        train_image,
        train_pairs,
        test_text,
        test_image,
        test_pairs,
        labels,
        w_star,
        clusters,
    })
}

/// A uniformly random subset of `round(fraction · n)` pairs, plus the ids left unpaired.
pub fn split_supervision(pairs: &PairSet, fraction: f64, seed: u64) -> Result<(PairSet, Vec<String>, Vec<String>)> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::Param(format!("supervision fraction {fraction} outside [0, 1]")));
    }
    let n = pairs.len();
    let m = supervised_count(n, fraction);
    let mut rng = RngState::with_stream(seed, streams::SPLIT);
    let order = rng.permutation(n);
    let mut chosen = order[..m].to_vec();
    chosen.sort_unstable();
    let mut rest = order[m..].to_vec();
    rest.sort_unstable();
    let all = pairs.as_slice();
    let sup = chosen.iter().map(|&i| all[i].clone()).collect();
    let text = rest.iter().map(|&i| all[i].0.clone()).collect();
    let image = rest.iter().map(|&i| all[i].1.clone()).collect();
    Ok((sup, text, image))
}

/// `round(fraction · n)`, halves rounded away from zero.
pub fn supervised_count(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64).round() as usize).min(n)
}
