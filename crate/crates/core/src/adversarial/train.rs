use std::fmt;

use super::discriminator::Discriminator;
use super::losses::{d_loss_and_grad, g_loss_and_grad};
use crate::align::{
    ea_grad, ea_loss, glorot_uniform, induce_dictionary, ortho_grad, refine, AlignConfig, InductionRule, Method,
    ProjectionModel, RefinementInfo,
};
use crate::error::{Error, Result};
use crate::format::fmt_f64;
use crate::linalg::Matrix;
use crate::rng::{mix64, streams, RngState};

/// Starting point for `W`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WInit {
    /// Uniform `(−a, a)`, `a = √(6 / (d_X + d_Y))`.
    Glorot,
    /// Identity (square maps only).
    Identity,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GanConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub d_steps_per_g_step: usize,
    pub learning_rate_d: f64,
    pub learning_rate_g: f64,
    /// Multiplicative learning-rate decay applied after every epoch.
    pub lr_decay: f64,
    /// Weight of the adversarial term in the semi-supervised objective.
    pub lambda: f64,
    pub smoothing: f64,
    pub hidden: usize,
    pub beta: f64,
    pub ortho_enabled: bool,
    /// Columns used for the per-epoch dictionary-similarity validation metric.
    pub validation_size: usize,
    pub init: WInit,
    /// Procrustes refinement after adversarial training (adv-proc only).
    pub refinement_rounds: usize,
    pub dictionary_size: usize,
    pub induction: InductionRule,
    /// Independent adversarial runs for adv-proc; the one whose refined
    /// dictionary has the highest mean cosine is kept.
    pub restarts: usize,
}

impl Default for GanConfig {
    fn default() -> Self {
        GanConfig {
            epochs: 30,
            batch_size: 64,
            d_steps_per_g_step: 1,
            learning_rate_d: 0.1,
            learning_rate_g: 0.1,
            lr_decay: 0.98,
            lambda: 0.1,
            smoothing: 0.0,
            hidden: 256,
            beta: crate::align::DEFAULT_BETA,
            ortho_enabled: true,
            validation_size: 500,
            init: WInit::Glorot,
            refinement_rounds: 5,
            dictionary_size: 10_000,
            induction: InductionRule::MutualNn,
            restarts: 1,
        }
    }
}

impl GanConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Param(format!("{name} must be positive, got {v}")))
            }
        };
        positive(self.learning_rate_d, "discriminator learning rate")?;
        positive(self.learning_rate_g, "generator learning rate")?;
        positive(self.lr_decay, "learning-rate decay")?;
        if !(self.lambda >= 0.0) {
            return Err(Error::Param(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(0.0..0.5).contains(&self.smoothing) {
            return Err(Error::Param(format!("smoothing must be in [0, 0.5), got {}", self.smoothing)));
        }
        if !(self.beta >= 0.0) {
            return Err(Error::Param(format!("beta must be >= 0, got {}", self.beta)));
        }
        if self.batch_size == 0 || self.hidden == 0 || self.d_steps_per_g_step == 0 || self.restarts == 0 {
            return Err(Error::Param(
                "batch size, hidden size, discriminator steps and restarts must be >= 1".into(),
            ));
        }
        if self.refinement_rounds > 0 && self.dictionary_size == 0 {
            return Err(Error::Param("dictionary size must be >= 1 when refining".into()));
        }
        Ok(())
    }

    /// The alignment view of this config, stored with the trained model.
    pub fn align_config(&self) -> AlignConfig {
        AlignConfig {
            beta: self.beta,
            learning_rate: self.learning_rate_g,
            epochs: self.epochs,
            batch_size: self.batch_size,
            ortho_enabled: self.ortho_enabled,
            refinement_rounds: self.refinement_rounds,
            dictionary_size: self.dictionary_size,
            induction: self.induction,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub d_loss: f64,
    pub g_loss: f64,
    /// Mean squared alignment error per supervised pair (0 without pairs).
    pub ea_loss: f64,
    /// Mean cosine of the mutual-nearest-neighbour dictionary on a validation slice.
    pub val_metric: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainTrace {
    pub records: Vec<EpochRecord>,
}

impl TrainTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,d_loss,g_loss,ea_loss,val_metric\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.epoch,
                fmt_f64(r.d_loss),
                fmt_f64(r.g_loss),
                fmt_f64(r.ea_loss),
                fmt_f64(r.val_metric)
            ));
        }
        out
    }
}

/// Training error with everything recorded up to the failure.
#[derive(Debug)]
pub struct TrainFailure {
    pub error: Error,
    pub trace: TrainTrace,
}

impl fmt::Display for TrainFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (after {} epochs)", self.error, self.trace.len())
    }
}

impl std::error::Error for TrainFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

impl From<TrainFailure> for Error {
    fn from(f: TrainFailure) -> Self {
        f.error
    }
}

type TrainResult = std::result::Result<(ProjectionModel, TrainTrace), TrainFailure>;

/// Unsupervised adversarial alignment: no pairing information is used.
pub fn train_adversarial(x: &Matrix, y: &Matrix, config: &GanConfig, seed: u64) -> TrainResult {
    run(x, y, &[], 1.0, config, seed, Method::Adv)
}

/// `L_EA` on the supervised pairs plus `λ·L_Adv^W` on all samples for the
/// projection; the discriminator trains on `L_Adv^D` as usual.
///
/// `pairs` are `(text column, image column)` indices into `x` and `y`. With no
/// pairs this is exactly [`train_adversarial`].
pub fn train_semi_supervised(x: &Matrix, y: &Matrix, pairs: &[(usize, usize)], config: &GanConfig, seed: u64) -> TrainResult {
    if pairs.is_empty() {
        log::warn!("semi-supervised training without pairs; running plain adversarial training");
        return train_adversarial(x, y, config, seed);
    }
    if let Some(&(t, i)) = pairs.iter().find(|&&(t, i)| t >= x.cols() || i >= y.cols()) {
        return Err(TrainFailure {
            error: Error::Param(format!("pair ({t}, {i}) out of range")),
            trace: TrainTrace::default(),
        });
    }
    run(x, y, pairs, config.lambda, config, seed, Method::Semi)
}

/// Adversarial training followed by Procrustes refinement, repeated for
/// `config.restarts` independent initialisations. Selection uses only the
/// unsupervised dictionary criterion. The returned trace is the chosen run's.
pub fn train_adversarial_refined(x: &Matrix, y: &Matrix, config: &GanConfig, seed: u64) -> TrainResult {
    config.validate().map_err(|error| TrainFailure {
        error,
        trace: TrainTrace::default(),
    })?;
    let mut best: Option<(ProjectionModel, TrainTrace)> = None;
    for r in 0..config.restarts {
        let run_seed = restart_seed(seed, r);
        let (mut model, trace) = train_adversarial(x, y, config, run_seed)?;
        let refined = refine(
            &model.w,
            x,
            y,
            config.refinement_rounds,
            config.dictionary_size,
            config.induction,
        )
        .map_err(|error| TrainFailure {
            error,
            trace: trace.clone(),
        })?;
        let info = RefinementInfo {
            rounds: config.refinement_rounds,
            chosen_round: refined.chosen_round,
            mean_similarity: refined.mean_similarity(),
            restart: r,
        };
        log::debug!("adv-proc restart {r}: refined dictionary cosine {:.6}", info.mean_similarity);
        model.w = refined.w;
        model.method = Method::AdvProc;
        model.seed = seed;
        let better = best
            .as_ref()
            .is_none_or(|(b, _)| info.mean_similarity > b.refinement.as_ref().map_or(f64::NEG_INFINITY, |i| i.mean_similarity));
        model.refinement = Some(info);
        if better {
            best = Some((model, trace));
        }
    }
    Ok(best.expect("restarts >= 1 is validated"))
}

/// Seed of restart `r`; restart 0 uses the run seed itself.
pub fn restart_seed(seed: u64, r: usize) -> u64 {
    if r == 0 {
        seed
    } else {
        mix64(seed ^ mix64(r as u64))
    }
}

fn run(
    x: &Matrix,
    y: &Matrix,
    pairs: &[(usize, usize)],
    adv_weight: f64,
    config: &GanConfig,
    seed: u64,
    method: Method,
) -> TrainResult {
    let fail = |error: Error, trace: &TrainTrace| TrainFailure {
        error,
        trace: trace.clone(),
    };
    let mut trace = TrainTrace::default();
    config.validate().map_err(|e| fail(e, &trace))?;
    let (d_x, n_x) = x.shape();
    let (d_y, n_y) = y.shape();
    if n_x == 0 || n_y == 0 {
        return Err(fail(Error::Param("adversarial training needs samples in both spaces".into()), &trace));
    }

    let mut w = match config.init {
        WInit::Glorot => glorot_uniform(d_x, d_y, &mut RngState::with_stream(seed, streams::INIT)),
        WInit::Identity if d_x == d_y => Matrix::identity(d_x),
        WInit::Identity => {
            return Err(fail(
                Error::Param(format!("identity init needs a square map, got {d_x}x{d_y}")),
                &trace,
            ))
        }
    };
    let mut disc = Discriminator::init(d_y, config.hidden, &mut RngState::with_stream(seed, streams::DISCRIMINATOR_INIT));
    let mut adv_rng = RngState::with_stream(seed, streams::ADVERSARIAL_BATCHES);
    let mut sup_rng = RngState::with_stream(seed, streams::SUPERVISED_BATCHES);

    let (sup_x, sup_y) = if pairs.is_empty() {
        (Matrix::zeros(d_x, 0), Matrix::zeros(d_y, 0))
    } else {
        (
            x.select_columns(&pairs.iter().map(|p| p.0).collect::<Vec<_>>()),
            y.select_columns(&pairs.iter().map(|p| p.1).collect::<Vec<_>>()),
        )
    };
    let sup_batch = config.batch_size.min(pairs.len());
    let val_x = x.leading_columns(config.validation_size.min(n_x));
    let val_y = y.leading_columns(config.validation_size.min(n_y));

    let b = config.batch_size;
    let steps = n_x.max(n_y).div_ceil(b);
    let mut lr_d = config.learning_rate_d;
    let mut lr_g = config.learning_rate_g;
    let sample = |rng: &mut RngState, m: &Matrix, count: usize| {
        let idx: Vec<usize> = (0..count).map(|_| rng.index(m.cols())).collect();
        m.select_columns(&idx)
    };

    for epoch in 0..config.epochs {
        let (mut d_sum, mut g_sum) = (0.0, 0.0);
        for _ in 0..steps {
            for _ in 0..config.d_steps_per_g_step {
                let xb = sample(&mut adv_rng, x, b);
                let yb = sample(&mut adv_rng, y, b);
                let (l, g) = d_loss_and_grad(&disc, &w, &xb, &yb, config.smoothing);
                disc.add_scaled(-lr_d, &g);
                d_sum += l / config.d_steps_per_g_step as f64;
            }
            let xb = sample(&mut adv_rng, x, b);
            let (gl, gw) = g_loss_and_grad(&disc, &w, &xb);
            g_sum += gl;

            let mut grad = Matrix::zeros(d_x, d_y);
            if adv_weight != 0.0 {
                grad.add_scaled(adv_weight, &gw);
            }
            if sup_batch > 0 {
                let idx: Vec<usize> = (0..sup_batch).map(|_| sup_rng.index(pairs.len())).collect();
                let g = ea_grad(&w, &sup_x.select_columns(&idx), &sup_y.select_columns(&idx));
                grad.add_scaled(1.0 / sup_batch as f64, &g);
            }
            if config.ortho_enabled {
                grad.add_scaled(1.0, &ortho_grad(&w, config.beta));
            }
            w.add_scaled(-lr_g, &grad);
        }
        lr_d *= config.lr_decay;
        lr_g *= config.lr_decay;

        let ea = if pairs.is_empty() {
            0.0
        } else {
            ea_loss(&w, &sup_x, &sup_y) / pairs.len() as f64
        };
        let val = induce_dictionary(&w, &val_x, &val_y, usize::MAX, InductionRule::MutualNn).mean_similarity();
        let record = EpochRecord {
            epoch,
            d_loss: d_sum / steps as f64,
            g_loss: g_sum / steps as f64,
            ea_loss: ea,
            val_metric: val,
        };
        let finite = [record.d_loss, record.g_loss, record.ea_loss, record.val_metric]
            .iter()
            .all(|v| v.is_finite());
        trace.records.push(record);
        if !finite || !w.is_finite() || !disc.is_finite() {
            return Err(fail(
                Error::Numerical(format!("non-finite loss or weights in adversarial training at epoch {epoch}")),
                &trace,
            ));
        }
    }

    let mut model = ProjectionModel::new(w, method, seed, config.align_config());
    model.discriminator = Some(disc);
    Ok((model, trace))
}
