//! Discriminator and generator losses with analytic gradients.
//!
//! Batches follow the column convention: `x_batch` is `d_X × b`, `y_batch`
//! is `d_Y × b`. Probabilities are clamped to `[PROB_CLAMP, 1 − PROB_CLAMP]`
//! before taking logs; a clamped sample contributes no gradient.

use super::discriminator::{sigmoid, Discriminator};
use crate::linalg::Matrix;

pub const PROB_CLAMP: f64 = 1e-7;

/// Binary cross-entropy of one probability against `target`, and its
/// derivative with respect to the logit.
#[inline]
fn bce(logit: f64, target: f64) -> (f64, f64) {
    let p = sigmoid(logit);
    let clamped = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    let loss = -(target * clamped.ln() + (1.0 - target) * (1.0 - clamped).ln());
    let dlogit = if clamped == p { p - target } else { 0.0 };
    (loss, dlogit)
}

/// Rows `Wᵀx` for each column `x` of the batch.
fn projected_rows(w: &Matrix, x_batch: &Matrix) -> Matrix {
    x_batch.t_matmul(w)
}

/// `mean −log D(Wᵀx) + mean −log(1 − D(y))`, with optional label smoothing
/// (text target `1 − s`, image target `s`), and its gradient with respect to
/// every discriminator parameter.
pub fn d_loss_and_grad(
    d: &Discriminator,
    w: &Matrix,
    x_batch: &Matrix,
    y_batch: &Matrix,
    smoothing: f64,
) -> (f64, Discriminator) {
    let mut grad = Discriminator::zeros(d.input_dim(), d.hidden_dim());
    let mut total = 0.0;
    for (inputs, target) in [
        (projected_rows(w, x_batch), 1.0 - smoothing),
        (y_batch.transpose(), smoothing),
    ] {
        let b = inputs.rows() as f64;
        let fwd = d.forward_batch(&inputs);
        let mut dl = Vec::with_capacity(fwd.logits.len());
        for &z in &fwd.logits {
            let (l, g) = bce(z, target);
            total += l / b;
            dl.push(g / b);
        }
        d.backward(&inputs, &fwd, &dl, Some(&mut grad));
    }
    (total, grad)
}

pub fn d_loss(d: &Discriminator, w: &Matrix, x_batch: &Matrix, y_batch: &Matrix) -> f64 {
    d_loss_and_grad(d, w, x_batch, y_batch, 0.0).0
}

/// `mean −log(1 − D(Wᵀx))` and its gradient with respect to `W` (`D` frozen).
pub fn g_loss_and_grad(d: &Discriminator, w: &Matrix, x_batch: &Matrix) -> (f64, Matrix) {
    let inputs = projected_rows(w, x_batch);
    let b = inputs.rows() as f64;
    let fwd = d.forward_batch(&inputs);
    let mut total = 0.0;
    let mut dl = Vec::with_capacity(fwd.logits.len());
    for &z in &fwd.logits {
        let (l, g) = bce(z, 0.0);
        total += l / b;
        dl.push(g / b);
    }
    let d_inputs = d.backward(&inputs, &fwd, &dl, None);
    // v_r = Wᵀ x_r  ⇒  ∂L/∂W = Σ_r x_r ⊗ ∂L/∂v_r
    (total, x_batch.matmul(&d_inputs))
}

pub fn g_loss(d: &Discriminator, w: &Matrix, x_batch: &Matrix) -> f64 {
    g_loss_and_grad(d, w, x_batch).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngState;

    fn setup(seed: u64) -> (Discriminator, Matrix, Matrix, Matrix) {
        let mut rng = RngState::new(seed);
        let d = Discriminator::init(4, 12, &mut rng);
        let w = rng.normal_matrix(6, 4).scale(0.5);
        let x = rng.normal_matrix(6, 9);
        let y = rng.normal_matrix(4, 9);
        (d, w, x, y)
    }

    #[test]
    fn half_discriminator_losses() {
        let (_, w, x, y) = setup(1);
        let d = Discriminator::zeros(4, 12);
        assert!((d_loss(&d, &w, &x, &y) - 2.0 * 2f64.ln()).abs() < 1e-12);
        assert!((g_loss(&d, &w, &x) - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn separating_discriminator_drives_d_loss_to_zero() {
        // text projected to +10 on axis 0, images at -10; D reads axis 0
        let w = Matrix::identity(2);
        let x = Matrix::from_fn(2, 5, |i, _| if i == 0 { 10.0 } else { 0.0 });
        let y = x.scale(-1.0);
        let mut d = Discriminator::zeros(2, 1);
        d.w1[(0, 0)] = 5.0;
        d.w2[0] = 20.0;
        let loss = d_loss(&d, &w, &x, &y);
        assert!(loss >= 0.0 && loss < 1e-6, "{loss}");
        // generator success: D(Wᵀx) → 0
        let g = g_loss(&d, &w, &y);
        assert!(g >= 0.0 && g < 1e-6);
    }

    #[test]
    fn losses_stay_bounded_when_clamped() {
        let w = Matrix::identity(1);
        let x = Matrix::from_vec(1, 1, vec![-1e3]).unwrap();
        let mut d = Discriminator::zeros(1, 1);
        d.w1[(0, 0)] = 1.0;
        d.w2[0] = 1.0;
        let bound = -2.0 * PROB_CLAMP.ln();
        let l = d_loss(&d, &w, &x, &x.scale(-1.0));
        assert!(l.is_finite() && l <= bound + 1e-9);
    }

    #[test]
    fn d_gradient_matches_finite_differences() {
        let (d, w, x, y) = setup(2);
        for smoothing in [0.0, 0.1] {
            let (_, g) = d_loss_and_grad(&d, &w, &x, &y, smoothing);
            let flat = d.to_flat();
            let analytic = g.to_flat();
            let h = 1e-5;
            let mut fd = vec![0.0; flat.len()];
            for k in 0..flat.len() {
                let mut p = flat.clone();
                p[k] += h;
                let mut m = flat.clone();
                m[k] -= h;
                let dp = Discriminator::from_flat(4, 12, &p).unwrap();
                let dm = Discriminator::from_flat(4, 12, &m).unwrap();
                fd[k] = (d_loss_and_grad(&dp, &w, &x, &y, smoothing).0 - d_loss_and_grad(&dm, &w, &x, &y, smoothing).0)
                    / (2.0 * h);
            }
            let num: f64 = analytic.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let den: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt();
            assert!(num / den < 1e-4, "{:e}", num / den);
        }
    }

    #[test]
    fn g_gradient_matches_finite_differences() {
        let (d, w, x, _) = setup(3);
        let (_, g) = g_loss_and_grad(&d, &w, &x);
        let h = 1e-5;
        let mut fd = Matrix::zeros(w.rows(), w.cols());
        for i in 0..w.rows() {
            for j in 0..w.cols() {
                let mut p = w.clone();
                p[(i, j)] += h;
                let mut m = w.clone();
                m[(i, j)] -= h;
                fd[(i, j)] = (g_loss(&d, &p, &x) - g_loss(&d, &m, &x)) / (2.0 * h);
            }
        }
        let rel = (&g - &fd).frobenius_norm() / g.frobenius_norm();
        assert!(rel < 1e-4, "{rel:e}");
    }
}
