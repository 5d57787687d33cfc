//! Adversarial alignment: a two-layer SELU discriminator tries to tell
//! projected text from images while the projection learns to fool it.

mod discriminator;
mod losses;
mod train;

pub use discriminator::{selu, selu_derivative, Discriminator, SELU_ALPHA, SELU_LAMBDA};
pub use losses::{d_loss, d_loss_and_grad, g_loss, g_loss_and_grad, PROB_CLAMP};
pub use train::{
    restart_seed, train_adversarial, train_adversarial_refined, train_semi_supervised, EpochRecord, GanConfig, TrainFailure, TrainTrace,
    WInit,
};
