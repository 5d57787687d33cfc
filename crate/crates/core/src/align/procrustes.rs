use crate::error::{Error, Result};
use crate::linalg::{svd, Matrix};

/// Orthogonal `W` minimizing `‖WᵀX − Y‖_F`: `W = U·Vᵀ` where `X·Yᵀ = U·S·Vᵀ`.
pub fn solve_procrustes(x: &Matrix, y: &Matrix) -> Result<Matrix> {
    if x.rows() != y.rows() {
        return Err(Error::Shape(format!(
            "Procrustes needs equal dimensions, got {} and {}",
            x.rows(),
            y.rows()
        )));
    }
    super::check_columns(x, y)?;
    let cross = x.matmul_t(y);
    let dec = svd(&cross)?;
    if dec.s.first().is_none_or(|&s| s == 0.0) {
        return Err(Error::Numerical("X·Yᵀ is zero; Procrustes is undetermined".into()));
    }
    Ok(dec.u.matmul_t(&dec.v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngState;

    #[test]
    fn identical_sets_give_identity() {
        let x = RngState::new(1).normal_matrix(6, 30);
        let w = solve_procrustes(&x, &x).unwrap();
        assert!((&w - &Matrix::identity(6)).max_abs() < 1e-12);
    }

    #[test]
    fn recovers_rotation() {
        let mut rng = RngState::new(2);
        let q = rng.orthogonal_matrix(10);
        let x = rng.normal_matrix(10, 50);
        let y = q.t_matmul(&x);
        let w = solve_procrustes(&x, &y).unwrap();
        assert!((&w - &q).max_abs() < 1e-8);
    }

    #[test]
    fn noisy_rotation_stays_exactly_orthogonal() {
        let mut rng = RngState::new(3);
        let q = rng.orthogonal_matrix(8);
        let x = rng.normal_matrix(8, 200);
        let y = &q.t_matmul(&x) + &rng.normal_matrix(8, 200).scale(0.01);
        let w = solve_procrustes(&x, &y).unwrap();
        assert!((&w.t_matmul(&w) - &Matrix::identity(8)).frobenius_norm() < 1e-10);
        assert!((&w - &q).frobenius_norm() < 0.01);
    }

    #[test]
    fn zero_cross_covariance_is_an_error() {
        let x = Matrix::zeros(3, 4);
        assert!(solve_procrustes(&x, &x).is_err());
        assert!(solve_procrustes(&Matrix::zeros(3, 4), &Matrix::zeros(2, 4)).is_err());
    }
}
