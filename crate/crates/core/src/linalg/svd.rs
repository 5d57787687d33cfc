//! Thin SVD by one-sided (Hestenes) Jacobi rotations.
//!
//! Columns of the working copy are rotated pairwise until every pair is
//! orthogonal to within [`SVD_TOLERANCE`]. The column norms are then the singular
//! values, the normalized columns are `U`, and the accumulated rotations are `V`.

use crate::error::{Error, Result};
use crate::linalg::matrix::{dot, Matrix};

pub const SVD_MAX_SWEEPS: usize = 10_000;
pub const SVD_TOLERANCE: f64 = 1e-12;

/// `m = u · diag(s) · vᵀ` with `u: r×k`, `v: c×k`, `k = min(r, c)`.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub v: Matrix,
}

impl Svd {
    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.u.clone();
        for i in 0..us.rows() {
            for (x, s) in us.row_mut(i).iter_mut().zip(&self.s) {
                *x *= s;
            }
        }
        us.matmul_t(&self.v)
    }

    /// Numerical rank with the usual `max(r, c) · eps · s_max` cutoff.
    pub fn rank(&self) -> usize {
        let cutoff = self.cutoff();
        self.s.iter().filter(|&&s| s > cutoff).count()
    }

    pub(crate) fn cutoff(&self) -> f64 {
        let smax = self.s.first().copied().unwrap_or(0.0);
        smax * f64::EPSILON * self.u.rows().max(self.v.rows()) as f64
    }
}

pub fn svd(m: &Matrix) -> Result<Svd> {
    if !m.is_finite() {
        return Err(Error::Param("svd input contains non-finite entries".into()));
    }
    if m.rows() >= m.cols() {
        jacobi(m)
    } else {
        let t = jacobi(&m.transpose())?;
        Ok(Svd {
            u: t.v,
            s: t.s,
            v: t.u,
        })
    }
}

fn jacobi(m: &Matrix) -> Result<Svd> {
    let (rows, n) = m.shape();
    // column-major working copies so each rotation touches contiguous memory
    let mut a: Vec<Vec<f64>> = (0..n).map(|j| m.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    let mut converged = n < 2;
    let mut sweeps = 0;
    while !converged {
        if sweeps == SVD_MAX_SWEEPS {
            let norms: Vec<f64> = a.iter().map(|c| dot(c, c).sqrt()).collect();
            let max = norms.iter().cloned().fold(0.0, f64::max);
            let min = norms.iter().cloned().fold(f64::INFINITY, f64::min);
            return Err(Error::Numerical(format!(
                "svd did not converge after {SVD_MAX_SWEEPS} sweeps on a {rows}x{n} matrix \
                 (column norm range {min:.3e}..{max:.3e}, condition estimate {:.3e})",
                if min > 0.0 { max / min } else { f64::INFINITY }
            )));
        }
        sweeps += 1;
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let alpha = dot(&a[p], &a[p]);
                let beta = dot(&a[q], &a[q]);
                let gamma = dot(&a[p], &a[q]);
                if alpha == 0.0 || beta == 0.0 || gamma.abs() <= SVD_TOLERANCE * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (lo, hi) = a.split_at_mut(q);
                rotate(&mut lo[p], &mut hi[0], c, s);
                let (lo, hi) = v.split_at_mut(q);
                rotate(&mut lo[p], &mut hi[0], c, s);
            }
        }
        converged = !rotated;
    }

    let norms: Vec<f64> = a.iter().map(|c| dot(c, c).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));

    let s: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let smax = s.first().copied().unwrap_or(0.0);
    let cutoff = smax * f64::EPSILON * rows.max(n) as f64;

    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut pending = Vec::new();
    for (k, &j) in order.iter().enumerate() {
        if s[k] > cutoff && s[k] > 0.0 {
            u_cols.push(a[j].iter().map(|x| x / s[k]).collect());
        } else {
            u_cols.push(Vec::new());
            pending.push(k);
        }
    }
    complete_basis(&mut u_cols, &pending, rows);

    let mut u = Matrix::zeros(rows, n);
    let mut vm = Matrix::zeros(n, n);
    for (k, &j) in order.iter().enumerate() {
        u.set_column(k, &u_cols[k]);
        vm.set_column(k, &v[j]);
    }
    Ok(Svd { u, s, v: vm })
}

#[inline]
fn rotate(x: &mut [f64], y: &mut [f64], c: f64, s: f64) {
    for (xi, yi) in x.iter_mut().zip(y.iter_mut()) {
        let (a, b) = (*xi, *yi);
        *xi = c * a - s * b;
        *yi = s * a + c * b;
    }
}

/// Fills the empty slots in `cols` with unit vectors orthogonal to every
/// other column, drawing candidates from the standard basis.
fn complete_basis(cols: &mut [Vec<f64>], pending: &[usize], dim: usize) {
    let mut candidate = 0;
    for &slot in pending {
        loop {
            assert!(candidate < dim, "cannot complete orthonormal basis");
            let mut e = vec![0.0; dim];
            e[candidate] = 1.0;
            candidate += 1;
            for _ in 0..2 {
                for c in cols.iter().filter(|c| !c.is_empty()) {
                    let proj = dot(c, &e);
                    for (ei, ci) in e.iter_mut().zip(c) {
                        *ei -= proj * ci;
                    }
                }
            }
            let norm = dot(&e, &e).sqrt();
            if norm > 1e-6 {
                cols[slot] = e.into_iter().map(|x| x / norm).collect();
                break;
            }
        }
    }
}
