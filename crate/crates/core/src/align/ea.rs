use super::{check_columns, ortho_grad, ortho_penalty, AlignConfig, Method, ProjectionModel};
use crate::error::{Error, Result};
use crate::linalg::{solve_least_squares, Matrix};
use crate::rng::{streams, RngState};

/// `Wᵀ·X`
pub fn project(w: &Matrix, x: &Matrix) -> Matrix {
    w.t_matmul(x)
}

/// `‖WᵀX − Y‖²_F`
pub fn ea_loss(w: &Matrix, x: &Matrix, y: &Matrix) -> f64 {
    (&project(w, x) - y).frobenius_norm_sq()
}

/// `∂/∂W ‖WᵀX − Y‖²_F = 2·X·(WᵀX − Y)ᵀ`
pub fn ea_grad(w: &Matrix, x: &Matrix, y: &Matrix) -> Matrix {
    let residual = &project(w, x) - y;
    x.matmul_t(&residual).scale(2.0)
}

/// Entries uniform in `(−a, a)`, `a = √(6 / (d_X + d_Y))`.
pub fn glorot_uniform(d_x: usize, d_y: usize, rng: &mut RngState) -> Matrix {
    let a = (6.0 / (d_x + d_y) as f64).sqrt();
    rng.uniform_matrix(d_x, d_y, -a, a)
}

/// Exact minimizer of `‖WᵀX − Y‖²_F`, solving `XᵀW = Yᵀ` in the least-squares
/// sense (minimum-norm `W` when `X` is rank deficient).
pub fn fit_ea_closed(x: &Matrix, y: &Matrix) -> Result<ProjectionModel> {
    check_columns(x, y)?;
    let w = solve_least_squares(&x.transpose(), &y.transpose())?;
    Ok(ProjectionModel::new(w, Method::EaClosed, 0, AlignConfig::default()))
}

/// Mini-batch gradient descent on `(1/b)·‖WᵀX_b − Y_b‖²_F` plus, when enabled,
/// the orthogonality penalty.
pub fn fit_ea_gradient(x: &Matrix, y: &Matrix, config: &AlignConfig, seed: u64) -> Result<ProjectionModel> {
    check_columns(x, y)?;
    config.validate()?;
    let n = x.cols();
    let mut w = glorot_uniform(x.rows(), y.rows(), &mut RngState::with_stream(seed, streams::INIT));
    let mut batches = RngState::with_stream(seed, streams::SUPERVISED_BATCHES);

    let objective = |w: &Matrix| {
        let mut l = ea_loss(w, x, y) / n as f64;
        if config.ortho_enabled {
            l += ortho_penalty(w, config.beta);
        }
        l
    };
    let initial = objective(&w);
    for epoch in 0..config.epochs {
        let order = batches.permutation(n);
        for chunk in order.chunks(config.batch_size) {
            let xb = x.select_columns(chunk);
            let yb = y.select_columns(chunk);
            let mut g = ea_grad(&w, &xb, &yb).scale(1.0 / chunk.len() as f64);
            if config.ortho_enabled {
                g.add_scaled(1.0, &ortho_grad(&w, config.beta));
            }
            w.add_scaled(-config.learning_rate, &g);
        }
        let loss = objective(&w);
        if !loss.is_finite() || loss > 1e6 * initial.max(f64::MIN_POSITIVE) {
            return Err(Error::Numerical(format!(
                "gradient alignment diverged at epoch {epoch} (loss {loss:e} from {initial:e}); \
                 learning rate {} is too large",
                config.learning_rate
            )));
        }
    }
    Ok(ProjectionModel::new(w, Method::EaGrad, seed, config.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::align::off_diagonal_energy;

    fn fd_grad(f: impl Fn(&Matrix) -> f64, w: &Matrix, h: f64) -> Matrix {
        let mut g = Matrix::zeros(w.rows(), w.cols());
        for i in 0..w.rows() {
            for j in 0..w.cols() {
                let mut p = w.clone();
                p[(i, j)] += h;
                let mut m = w.clone();
                m[(i, j)] -= h;
                g[(i, j)] = (f(&p) - f(&m)) / (2.0 * h);
            }
        }
        g
    }

    #[test]
    fn exact_fit_has_zero_loss_and_gradient() {
        let mut rng = RngState::new(1);
        let w = rng.normal_matrix(4, 3);
        let x = rng.normal_matrix(4, 10);
        let y = project(&w, &x);
        assert!(ea_loss(&w, &x, &y) < 1e-24);
        assert!(ea_grad(&w, &x, &y).max_abs() < 1e-12);
    }

    #[test]
    fn scalar_case() {
        let m = |v: f64| Matrix::from_vec(1, 1, vec![v]).unwrap();
        let (w, x, y) = (1.5, 2.0, 0.5);
        assert!((ea_loss(&m(w), &m(x), &m(y)) - (w * x - y).powi(2)).abs() < 1e-15);
        assert!((ea_grad(&m(w), &m(x), &m(y))[(0, 0)] - 2.0 * x * (w * x - y)).abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = RngState::new(2);
        let w = rng.normal_matrix(5, 4);
        let x = rng.normal_matrix(5, 7);
        let y = rng.normal_matrix(4, 7);
        let g = ea_grad(&w, &x, &y);
        let fd = fd_grad(|w| ea_loss(w, &x, &y), &w, 1e-5);
        let rel = (&g - &fd).frobenius_norm() / g.frobenius_norm();
        assert!(rel < 1e-4, "{rel:e}");
    }

    #[test]
    fn closed_form_identity_inputs() {
        let y = Matrix::from_rows(&[vec![1.0, -2.0], vec![0.5, 3.0]]).unwrap();
        let m = fit_ea_closed(&Matrix::identity(2), &y).unwrap();
        assert!((&m.w - &y.transpose()).max_abs() < 1e-14);
    }

    #[test]
    fn closed_form_recovers_planted_map() {
        let mut rng = RngState::new(3);
        let w_true = rng.normal_matrix(12, 5);
        let x = rng.normal_matrix(12, 60);
        let y = project(&w_true, &x);
        let m = fit_ea_closed(&x, &y).unwrap();
        assert!((&m.w - &w_true).frobenius_norm() / w_true.frobenius_norm() < 1e-8);
    }

    #[test]
    fn closed_form_is_scale_equivariant() {
        let mut rng = RngState::new(4);
        let x = rng.normal_matrix(6, 20);
        let y = rng.normal_matrix(3, 20);
        let a = fit_ea_closed(&x, &y).unwrap().w;
        let b = fit_ea_closed(&x, &y.scale(2.5)).unwrap().w;
        assert!((&a.scale(2.5) - &b).max_abs() < 1e-12);
    }

    #[test]
    fn closed_form_is_a_global_minimum() {
        let mut rng = RngState::new(5);
        let x = rng.normal_matrix(6, 40);
        let y = rng.normal_matrix(4, 40);
        let w = fit_ea_closed(&x, &y).unwrap().w;
        let base = ea_loss(&w, &x, &y);
        for _ in 0..100 {
            let p = &w + &rng.normal_matrix(6, 4).scale(1e-3);
            assert!(ea_loss(&p, &x, &y) >= base);
        }
    }

    #[test]
    fn closed_form_shape_errors() {
        assert!(fit_ea_closed(&Matrix::zeros(2, 3), &Matrix::zeros(2, 4)).is_err());
        assert!(fit_ea_closed(&Matrix::zeros(2, 0), &Matrix::zeros(2, 0)).is_err());
    }

    #[test]
    fn gradient_fit_matches_closed_form_on_noiseless_data() {
        let mut rng = RngState::new(6);
        let w_true = rng.normal_matrix(16, 8).scale(0.3);
        let x = rng.normal_matrix(16, 400);
        let y = project(&w_true, &x);
        let cfg = AlignConfig {
            epochs: 60,
            batch_size: 32,
            learning_rate: 0.05,
            beta: 0.0,
            ..AlignConfig::default()
        };
        let m = fit_ea_gradient(&x, &y, &cfg, 9).unwrap();
        let closed = fit_ea_closed(&x, &y).unwrap().w;
        let rel = (&m.w - &closed).frobenius_norm() / closed.frobenius_norm();
        assert!(rel < 1e-2, "{rel}");
    }

    #[test]
    fn full_batch_loss_approaches_closed_form_on_noisy_data() {
        let mut rng = RngState::new(7);
        let w_true = rng.normal_matrix(8, 4);
        let x = rng.normal_matrix(8, 300);
        let y = &project(&w_true, &x) + &rng.normal_matrix(4, 300).scale(0.1);
        let cfg = AlignConfig {
            epochs: 400,
            batch_size: 300,
            learning_rate: 0.1,
            beta: 0.0,
            ..AlignConfig::default()
        };
        let m = fit_ea_gradient(&x, &y, &cfg, 1).unwrap();
        let best = ea_loss(&fit_ea_closed(&x, &y).unwrap().w, &x, &y);
        let got = ea_loss(&m.w, &x, &y);
        assert!(got <= best * (1.0 + 1e-3), "{got} vs {best}");
        let init = glorot_uniform(8, 4, &mut RngState::with_stream(1, streams::INIT));
        assert!(got <= ea_loss(&init, &x, &y));
    }

    #[test]
    fn ortho_penalty_reduces_off_diagonal_energy() {
        let mut rng = RngState::new(8);
        let q = rng.orthogonal_matrix(8);
        let x = rng.normal_matrix(8, 30);
        let y = &project(&q, &x) + &rng.normal_matrix(8, 30).scale(0.3);
        let mut cfg = AlignConfig {
            epochs: 40,
            batch_size: 10,
            learning_rate: 0.05,
            beta: 0.0,
            ..AlignConfig::default()
        };
        let plain = fit_ea_gradient(&x, &y, &cfg, 3).unwrap();
        cfg.beta = 0.01;
        cfg.ortho_enabled = true;
        let reg = fit_ea_gradient(&x, &y, &cfg, 3).unwrap();
        assert!(off_diagonal_energy(&reg.w) < off_diagonal_energy(&plain.w));
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let mut rng = RngState::new(9);
        let x = rng.normal_matrix(3, 5);
        let y = rng.normal_matrix(2, 5);
        let cfg = AlignConfig {
            epochs: 0,
            ..AlignConfig::default()
        };
        let m = fit_ea_gradient(&x, &y, &cfg, 11).unwrap();
        let init = glorot_uniform(3, 2, &mut RngState::with_stream(11, streams::INIT));
        assert_eq!(m.w, init);
    }

    #[test]
    fn divergence_names_learning_rate() {
        let mut rng = RngState::new(10);
        let x = rng.normal_matrix(4, 50).scale(10.0);
        let y = rng.normal_matrix(2, 50);
        let cfg = AlignConfig {
            learning_rate: 5.0,
            epochs: 20,
            ..AlignConfig::default()
        };
        let err = fit_ea_gradient(&x, &y, &cfg, 0).unwrap_err();
        assert!(err.to_string().contains("learning rate 5"), "{err}");
    }

    #[test]
    fn training_is_bit_reproducible() {
        let mut rng = RngState::new(11);
        let x = rng.normal_matrix(5, 40);
        let y = rng.normal_matrix(3, 40);
        let cfg = AlignConfig {
            ortho_enabled: true,
            ..AlignConfig::default()
        };
        let a = fit_ea_gradient(&x, &y, &cfg, 4).unwrap();
        let b = fit_ea_gradient(&x, &y, &cfg, 4).unwrap();
        assert_eq!(a.w.as_slice(), b.w.as_slice());
    }
}
