//! Supervised linear alignment and Procrustes refinement.
//!
//! Column convention throughout: `X` is `d_X × n` (one text sample per column),
//! `Y` is `d_Y × n`, and the learned map `W` is `d_X × d_Y` so that `Wᵀ·X`
//! lands in the image space.

mod dictionary;
mod ea;
mod ortho;
mod procrustes;

use std::fmt;
use std::str::FromStr;

pub use dictionary::{induce_dictionary, refine, Dictionary, DictionaryPair, InductionRule, Refinement};
pub use ea::{ea_grad, ea_loss, fit_ea_closed, fit_ea_gradient, glorot_uniform, project};
pub use ortho::{off_diagonal_energy, ortho_grad, ortho_penalty};
pub use procrustes::solve_procrustes;

use crate::adversarial::Discriminator;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Default orthogonality penalty weight.
pub const DEFAULT_BETA: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    EaClosed,
    EaGrad,
    Adv,
    AdvProc,
    Semi,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::EaClosed,
        Method::EaGrad,
        Method::Adv,
        Method::AdvProc,
        Method::Semi,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::EaClosed => "ea-closed",
            Method::EaGrad => "ea-grad",
            Method::Adv => "adv",
            Method::AdvProc => "adv-proc",
            Method::Semi => "semi",
        }
    }

    /// Whether the method cannot run without pairs.
    pub fn requires_pairs(self) -> bool {
        matches!(self, Method::EaClosed | Method::EaGrad)
    }

    /// Whether the method needs text and image features of equal dimension.
    pub fn requires_square(self) -> bool {
        matches!(self, Method::Adv | Method::AdvProc)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Param(format!("unknown method `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlignConfig {
    pub beta: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub ortho_enabled: bool,
    pub refinement_rounds: usize,
    pub dictionary_size: usize,
    pub induction: InductionRule,
}

impl Default for AlignConfig {
    fn default() -> Self {
        AlignConfig {
            beta: DEFAULT_BETA,
            learning_rate: 0.1,
            epochs: 50,
            batch_size: 64,
            ortho_enabled: false,
            refinement_rounds: 5,
            dictionary_size: 10_000,
            induction: InductionRule::MutualNn,
        }
    }
}

impl AlignConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0) {
            return Err(Error::Param(format!("beta must be >= 0, got {}", self.beta)));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Param(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Param("batch size must be >= 1".into()));
        }
        if self.refinement_rounds > 0 && self.dictionary_size == 0 {
            return Err(Error::Param("dictionary size must be >= 1 when refining".into()));
        }
        Ok(())
    }
}

/// Outcome of Procrustes refinement, recorded with the model.
#[derive(Clone, Debug, PartialEq)]
pub struct RefinementInfo {
    pub rounds: usize,
    pub chosen_round: usize,
    pub mean_similarity: f64,
    /// Index of the adversarial restart the model came from.
    pub restart: usize,
}

/// A learned text→image projection.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionModel {
    /// `d_X × d_Y`.
    pub w: Matrix,
    pub method: Method,
    pub seed: u64,
    pub config: AlignConfig,
    pub discriminator: Option<Discriminator>,
    pub refinement: Option<RefinementInfo>,
}

impl ProjectionModel {
    pub fn new(w: Matrix, method: Method, seed: u64, config: AlignConfig) -> Self {
        ProjectionModel {
            w,
            method,
            seed,
            config,
            discriminator: None,
            refinement: None,
        }
    }

    pub fn text_dim(&self) -> usize {
        self.w.rows()
    }

    pub fn image_dim(&self) -> usize {
        self.w.cols()
    }

    /// Maps rows of a text feature matrix (`n × d_X`) into the image space (`n × d_Y`).
    pub fn project_rows(&self, text_rows: &Matrix) -> Result<Matrix> {
        if text_rows.cols() != self.text_dim() {
            return Err(Error::Shape(format!(
                "model expects {} text features, got {}",
                self.text_dim(),
                text_rows.cols()
            )));
        }
        Ok(text_rows.matmul(&self.w))
    }
}

pub(crate) fn check_columns(x: &Matrix, y: &Matrix) -> Result<()> {
    if x.cols() != y.cols() {
        return Err(Error::Shape(format!(
            "X has {} columns but Y has {}",
            x.cols(),
            y.cols()
        )));
    }
    if x.cols() == 0 {
        return Err(Error::Param("alignment needs at least one matched pair".into()));
    }
    Ok(())
}
