use crate::error::{Error, Result};
use crate::linalg::matrix::Matrix;
use crate::linalg::svd::svd;

/// Principal component projection fitted on centered (not scaled) data.
///
/// Component signs are canonical: each component is oriented so that the
/// training data projected onto it has a non-negative third moment. When the
/// third moment vanishes the largest-magnitude loading is made positive.
#[derive(Clone, Debug, PartialEq)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `d × k`, orthonormal columns.
    pub components: Matrix,
    pub explained_variance_ratio: Vec<f64>,
}

impl PcaModel {
    pub fn k(&self) -> usize {
        self.components.cols()
    }

    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    /// Projects rows of `data` (`n × d`) to `n × k`.
    pub fn transform(&self, data: &Matrix) -> Result<Matrix> {
        if data.cols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "PCA fitted on {} features, got {}",
                self.input_dim(),
                data.cols()
            )));
        }
        Ok(self.center(data).matmul(&self.components))
    }

    /// Maps projected rows back to the input space.
    pub fn inverse_transform(&self, projected: &Matrix) -> Result<Matrix> {
        if projected.cols() != self.k() {
            return Err(Error::Shape(format!(
                "expected {} components, got {}",
                self.k(),
                projected.cols()
            )));
        }
        let mut out = projected.matmul_t(&self.components);
        for i in 0..out.rows() {
            for (x, m) in out.row_mut(i).iter_mut().zip(&self.mean) {
                *x += m;
            }
        }
        Ok(out)
    }

    fn center(&self, data: &Matrix) -> Matrix {
        let mut c = data.clone();
        for i in 0..c.rows() {
            for (x, m) in c.row_mut(i).iter_mut().zip(&self.mean) {
                *x -= m;
            }
        }
        c
    }
}

/// Fits a `k`-component PCA on the rows of `data` (`n × d`).
pub fn fit_pca(data: &Matrix, k: usize) -> Result<PcaModel> {
    let (n, d) = data.shape();
    if n < 2 {
        return Err(Error::Param(format!("PCA needs at least 2 samples, got {n}")));
    }
    if k == 0 || k > n.min(d) {
        return Err(Error::Param(format!(
            "PCA components must be in 1..={}, got {k}",
            n.min(d)
        )));
    }
    let mut mean = vec![0.0; d];
    for i in 0..n {
        for (m, x) in mean.iter_mut().zip(data.row(i)) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut model = PcaModel {
        mean,
        components: Matrix::zeros(d, k),
        explained_variance_ratio: Vec::new(),
    };
    let centered = model.center(data);
    let dec = svd(&centered)?;

    let total: f64 = dec.s.iter().map(|s| s * s).sum();
    model.explained_variance_ratio = dec
        .s
        .iter()
        .take(k)
        .map(|s| if total > 0.0 { s * s / total } else { 0.0 })
        .collect();

    let mut components = dec.v.leading_columns(k);
    let projected = centered.matmul(&components);
    for j in 0..k {
        let m3: f64 = (0..n).map(|i| projected[(i, j)].powi(3)).sum();
        let scale: f64 = (0..n).map(|i| projected[(i, j)].abs().powi(3)).sum();
        let flip = if scale > 0.0 && m3.abs() > 1e-8 * scale {
            m3 < 0.0
        } else {
            let col = components.column(j);
            let pivot = col
                .iter()
                .enumerate()
                .fold(0, |best, (i, x)| if x.abs() > col[best].abs() { i } else { best });
            col[pivot] < 0.0
        };
        if flip {
            for i in 0..d {
                components[(i, j)] = -components[(i, j)];
            }
        }
    }
    model.components = components;
    Ok(model)
}
