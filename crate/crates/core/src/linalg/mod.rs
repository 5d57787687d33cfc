//! Dense linear algebra: row-major matrices, SVD, least squares and PCA.

mod lstsq;
mod matrix;
mod pca;
mod svd;

pub use lstsq::{pseudo_inverse, solve_least_squares};
pub use matrix::{dot, norm, Matrix};
pub use pca::{fit_pca, PcaModel};
pub use svd::{svd, Svd, SVD_MAX_SWEEPS, SVD_TOLERANCE};
