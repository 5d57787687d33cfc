use crate::error::{Error, Result};
use crate::linalg::matrix::Matrix;
use crate::linalg::svd::svd;

/// Moore-Penrose pseudoinverse via SVD, truncating singular values below
/// `max(r, c) · eps · s_max`.
pub fn pseudo_inverse(a: &Matrix) -> Result<Matrix> {
    let d = svd(a)?;
    let cutoff = d.cutoff();
    // V · S⁺ · Uᵀ
    let mut vs = d.v.clone();
    for i in 0..vs.rows() {
        for (x, &s) in vs.row_mut(i).iter_mut().zip(&d.s) {
            *x = if s > cutoff && s > 0.0 { *x / s } else { 0.0 };
        }
    }
    Ok(vs.matmul_t(&d.u))
}

/// Minimum-norm solution of `min ‖A·X − B‖_F`.
pub fn solve_least_squares(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.rows() != b.rows() {
        return Err(Error::Shape(format!(
            "least squares needs equal row counts, got {} and {}",
            a.rows(),
            b.rows()
        )));
    }
    Ok(pseudo_inverse(a)?.matmul(b))
}
