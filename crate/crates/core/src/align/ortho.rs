use crate::linalg::Matrix;

/// `WᵀW` with its diagonal zeroed.
fn off_diagonal_gram(w: &Matrix) -> Matrix {
    let mut g = w.t_matmul(w);
    for i in 0..g.rows() {
        g[(i, i)] = 0.0;
    }
    g
}

/// Sum of squared off-diagonal entries of `WᵀW`.
pub fn off_diagonal_energy(w: &Matrix) -> f64 {
    off_diagonal_gram(w).frobenius_norm_sq()
}

/// `β · ‖WᵀW ⊙ (eeᵀ − I)‖²_F`
pub fn ortho_penalty(w: &Matrix, beta: f64) -> f64 {
    beta * off_diagonal_energy(w)
}

/// `4β · W · (WᵀW ⊙ (eeᵀ − I))`
pub fn ortho_grad(w: &Matrix, beta: f64) -> Matrix {
    w.matmul(&off_diagonal_gram(w)).scale(4.0 * beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngState;

    #[test]
    fn orthogonal_columns_have_no_penalty() {
        let w = Matrix::from_rows(&[vec![2.0, 0.0], vec![0.0, -3.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(ortho_penalty(&w, 0.01), 0.0);
        let q = RngState::new(1).orthogonal_matrix(5);
        assert!(ortho_penalty(&q, 1.0) < 1e-28);
    }

    #[test]
    fn all_ones_example() {
        let w = Matrix::from_vec(2, 2, vec![1.0; 4]).unwrap();
        assert!((ortho_penalty(&w, 0.01) - 0.08).abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = RngState::new(2);
        let w = rng.normal_matrix(5, 3);
        let beta = 0.37;
        let g = ortho_grad(&w, beta);
        let h = 1e-5;
        let mut fd = Matrix::zeros(5, 3);
        for i in 0..5 {
            for j in 0..3 {
                let mut p = w.clone();
                p[(i, j)] += h;
                let mut m = w.clone();
                m[(i, j)] -= h;
                fd[(i, j)] = (ortho_penalty(&p, beta) - ortho_penalty(&m, beta)) / (2.0 * h);
            }
        }
        let rel = (&g - &fd).frobenius_norm() / g.frobenius_norm();
        assert!(rel < 1e-4, "{rel:e}");
    }
}
