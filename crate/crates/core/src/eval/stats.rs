use super::Direction;
use crate::error::{Error, Result};

/// Per-seed values of one metric with a normal-approximation 95% CI.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricReport {
    pub name: String,
    pub direction: Option<Direction>,
    pub k: Option<usize>,
    pub per_seed: Vec<f64>,
    pub mean: f64,
    pub ci95_halfwidth: f64,
}

impl MetricReport {
    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = Some(direction);
        self
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = Some(k);
        self
    }
}

/// Mean and 1.96·s/√n halfwidth (sample standard deviation, n - 1 denominator).
pub fn aggregate_ci(name: &str, per_seed: &[f64]) -> Result<MetricReport> {
    if per_seed.is_empty() {
        return Err(Error::Param(format!("metric `{name}` has no per-seed values")));
    }
    if let Some(bad) = per_seed.iter().find(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!("metric `{name}` has non-finite value {bad}")));
    }
    let n = per_seed.len() as f64;
    let mean = per_seed.iter().sum::<f64>() / n;
    let half = if per_seed.len() < 2 {
        log::warn!("metric `{name}` has a single value; reporting a zero-width interval");
        0.0
    } else {
        let var = per_seed.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        1.96 * var.sqrt() / n.sqrt()
    };
    Ok(MetricReport {
        name: name.to_string(),
        direction: None,
        k: None,
        per_seed: per_seed.to_vec(),
        mean,
        ci95_halfwidth: half,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn examples() {
        let r = aggregate_ci("m", &[0.3, 0.3, 0.3]).unwrap();
        assert!((r.mean - 0.3).abs() < 1e-15);
        assert_eq!(r.ci95_halfwidth, 0.0);

        let r = aggregate_ci("m", &[0.0, 1.0]).unwrap();
        assert_eq!(r.mean, 0.5);
        assert!((r.ci95_halfwidth - 0.98).abs() < 1e-12);

        let r = aggregate_ci("m", &[0.7]).unwrap();
        assert_eq!((r.mean, r.ci95_halfwidth, r.per_seed.len()), (0.7, 0.0, 1));
        assert!(aggregate_ci("m", &[]).is_err());
        assert!(aggregate_ci("m", &[f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn matches_two_pass_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let dist = Normal::new(3.0, 2.0).unwrap();
        let xs: Vec<f64> = (0..5).map(|_| dist.sample(&mut rng)).collect();
        // Welford running variance as an independent route
        let (mut m, mut s2) = (0.0, 0.0);
        for (i, x) in xs.iter().enumerate() {
            let d = x - m;
            m += d / (i + 1) as f64;
            s2 += d * (x - m);
        }
        let half = 1.96 * (s2 / 4.0).sqrt() / 5f64.sqrt();
        let r = aggregate_ci("m", &xs).unwrap();
        assert!((r.mean - m).abs() < 1e-12);
        assert!((r.ci95_halfwidth - half).abs() < 1e-12);
    }

    #[test]
    fn halfwidth_shrinks_as_inverse_sqrt() {
        let block = [0.1, 0.4, 0.2, 0.9];
        let h1 = aggregate_ci("m", &block).unwrap().ci95_halfwidth;
        let rep: Vec<f64> = block.iter().cycle().take(block.len() * 16).copied().collect();
        let h16 = aggregate_ci("m", &rep).unwrap().ci95_halfwidth;
        // sample variance changes by (n-1) factors; compare with that correction
        let var1 = 3.0f64;
        let var16 = 63.0f64 / 16.0;
        let expected = h1 / 4.0 * (var1 / var16).sqrt();
        assert!((h16 - expected).abs() < 1e-12);
    }
}
