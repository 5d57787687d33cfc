use crate::linalg::{dot, Matrix};
use crate::rng::RngState;

pub const SELU_LAMBDA: f64 = 1.050_700_987_355_480_5;
pub const SELU_ALPHA: f64 = 1.673_263_242_354_377_3;

#[inline]
pub fn selu(x: f64) -> f64 {
    if x > 0.0 {
        SELU_LAMBDA * x
    } else {
        SELU_LAMBDA * SELU_ALPHA * x.exp_m1()
    }
}

#[inline]
pub fn selu_derivative(x: f64) -> f64 {
    if x > 0.0 {
        SELU_LAMBDA
    } else {
        SELU_LAMBDA * SELU_ALPHA * x.exp()
    }
}

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `sigmoid(w2 · selu(w1ᵀ·v + b1) + b2)`.
///
/// The same struct doubles as the container for parameter gradients.
#[derive(Clone, Debug, PartialEq)]
pub struct Discriminator {
    /// `d_in × hidden`
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

/// Intermediate values of a batched forward pass, kept for backprop.
pub(crate) struct Forward {
    pub pre: Matrix,
    pub hidden: Matrix,
    pub logits: Vec<f64>,
}

impl Discriminator {
    pub fn zeros(d_in: usize, hidden: usize) -> Self {
        Discriminator {
            w1: Matrix::zeros(d_in, hidden),
            b1: vec![0.0; hidden],
            w2: vec![0.0; hidden],
            b2: 0.0,
        }
    }

    /// Fan-in scaled uniform weights (variance `1/fan_in`), zero biases.
    pub fn init(d_in: usize, hidden: usize, rng: &mut RngState) -> Self {
        let a1 = (3.0 / d_in as f64).sqrt();
        let a2 = (3.0 / hidden as f64).sqrt();
        Discriminator {
            w1: rng.uniform_matrix(d_in, hidden, -a1, a1),
            b1: vec![0.0; hidden],
            w2: (0..hidden).map(|_| rng.uniform(-a2, a2)).collect(),
            b2: 0.0,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w1.rows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w1.cols()
    }

    pub fn num_parameters(&self) -> usize {
        self.w1.rows() * self.w1.cols() + 2 * self.b1.len() + 1
    }

    /// Probability that `v` is a projected text point.
    pub fn forward(&self, v: &[f64]) -> f64 {
        let pre = self.w1.t_matvec(v);
        let logit: f64 = pre
            .iter()
            .zip(&self.b1)
            .zip(&self.w2)
            .map(|((p, b), w)| selu(p + b) * w)
            .sum::<f64>()
            + self.b2;
        sigmoid(logit)
    }

    /// Batched forward over the rows of `inputs` (`b × d_in`).
    pub(crate) fn forward_batch(&self, inputs: &Matrix) -> Forward {
        let mut pre = inputs.matmul(&self.w1);
        for i in 0..pre.rows() {
            for (p, b) in pre.row_mut(i).iter_mut().zip(&self.b1) {
                *p += b;
            }
        }
        let hidden = pre.map(selu);
        let logits = (0..hidden.rows()).map(|i| dot(hidden.row(i), &self.w2) + self.b2).collect();
        Forward { pre, hidden, logits }
    }

    /// Backpropagates `d_logits` (one per row). Accumulates parameter gradients
    /// into `grad` and returns the gradient with respect to the inputs.
    pub(crate) fn backward(&self, inputs: &Matrix, fwd: &Forward, d_logits: &[f64], grad: Option<&mut Discriminator>) -> Matrix {
        let h = self.hidden_dim();
        let mut d_pre = Matrix::zeros(inputs.rows(), h);
        for (r, &dl) in d_logits.iter().enumerate() {
            if dl == 0.0 {
                continue;
            }
            let row = d_pre.row_mut(r);
            for ((dp, &w), &p) in row.iter_mut().zip(&self.w2).zip(fwd.pre.row(r)) {
                *dp = dl * w * selu_derivative(p);
            }
        }
        if let Some(g) = grad {
            for (r, &dl) in d_logits.iter().enumerate() {
                g.b2 += dl;
                for (gw, hv) in g.w2.iter_mut().zip(fwd.hidden.row(r)) {
                    *gw += dl * hv;
                }
                for (gb, dp) in g.b1.iter_mut().zip(d_pre.row(r)) {
                    *gb += dp;
                }
            }
            g.w1.add_scaled(1.0, &inputs.t_matmul(&d_pre));
        }
        d_pre.matmul_t(&self.w1)
    }

    /// In-place `self += alpha · other`.
    pub fn add_scaled(&mut self, alpha: f64, other: &Discriminator) {
        self.w1.add_scaled(alpha, &other.w1);
        for (a, b) in self.b1.iter_mut().zip(&other.b1) {
            *a += alpha * b;
        }
        for (a, b) in self.w2.iter_mut().zip(&other.w2) {
            *a += alpha * b;
        }
        self.b2 += alpha * other.b2;
    }

    /// Flat parameter view: `w1` row-major, `b1`, `w2`, `b2`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.w1.as_slice().to_vec();
        v.extend_from_slice(&self.b1);
        v.extend_from_slice(&self.w2);
        v.push(self.b2);
        v
    }

    pub fn from_flat(d_in: usize, hidden: usize, flat: &[f64]) -> Option<Self> {
        if flat.len() != d_in * hidden + 2 * hidden + 1 {
            return None;
        }
        let (w1, rest) = flat.split_at(d_in * hidden);
        let (b1, rest) = rest.split_at(hidden);
        let (w2, rest) = rest.split_at(hidden);
        Some(Discriminator {
            w1: Matrix::from_vec(d_in, hidden, w1.to_vec()).ok()?,
            b1: b1.to_vec(),
            w2: w2.to_vec(),
            b2: rest[0],
        })
    }

    pub fn is_finite(&self) -> bool {
        self.to_flat().iter().all(|x| x.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selu_values() {
        assert_eq!(selu(0.0), 0.0);
        assert!((selu(1.0) - 1.0507).abs() < 1e-4);
        assert!((selu(-20.0) + SELU_LAMBDA * SELU_ALPHA).abs() < 1e-8);
        assert!((SELU_LAMBDA * SELU_ALPHA - 1.7581).abs() < 1e-4);
    }

    #[test]
    fn selu_derivative_matches_finite_differences() {
        for &x in &[-3.0, -0.5, -1e-3, 0.2, 4.0] {
            let h = 1e-6;
            let fd = (selu(x + h) - selu(x - h)) / (2.0 * h);
            assert!((fd - selu_derivative(x)).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_weights_output_half() {
        let d = Discriminator::zeros(4, 8);
        let mut rng = RngState::new(1);
        for _ in 0..10 {
            let v: Vec<f64> = (0..4).map(|_| rng.normal() * 10.0).collect();
            assert_eq!(d.forward(&v), 0.5);
        }
    }

    #[test]
    fn output_in_open_unit_interval() {
        let mut rng = RngState::new(2);
        let d = Discriminator::init(8, 16, &mut rng);
        let inputs = rng.normal_matrix(100_000, 8);
        let fwd = d.forward_batch(&inputs);
        for &l in &fwd.logits {
            let p = sigmoid(l);
            assert!(p > 0.0 && p < 1.0);
        }
    }

    #[test]
    fn batched_and_single_forward_agree() {
        let mut rng = RngState::new(3);
        let d = Discriminator::init(5, 7, &mut rng);
        let inputs = rng.normal_matrix(4, 5);
        let fwd = d.forward_batch(&inputs);
        for r in 0..4 {
            assert!((sigmoid(fwd.logits[r]) - d.forward(inputs.row(r))).abs() < 1e-14);
        }
    }

    #[test]
    fn input_gradient_matches_finite_differences() {
        let mut rng = RngState::new(4);
        let d = Discriminator::init(6, 10, &mut rng);
        let v = rng.normal_matrix(1, 6);
        let fwd = d.forward_batch(&v);
        let p = sigmoid(fwd.logits[0]);
        // d p / d v = p(1-p) · d logit / d v
        let g = d.backward(&v, &fwd, &[p * (1.0 - p)], None);
        let h = 1e-5;
        for j in 0..6 {
            let mut a = v.row(0).to_vec();
            a[j] += h;
            let mut b = v.row(0).to_vec();
            b[j] -= h;
            let fd = (d.forward(&a) - d.forward(&b)) / (2.0 * h);
            let rel = (fd - g[(0, j)]).abs() / fd.abs().max(1e-8);
            assert!(rel < 1e-4, "{rel:e}");
        }
    }

    #[test]
    fn flat_round_trip() {
        let d = Discriminator::init(3, 4, &mut RngState::new(5));
        assert_eq!(Discriminator::from_flat(3, 4, &d.to_flat()), Some(d));
    }
}
