//! Learn linear maps between a text embedding space and an image embedding
//! space, then measure how well the two line up through cross-modal retrieval.
//!
//! Alignment objectives: closed-form and gradient least squares, orthogonal
//! Procrustes with dictionary-induction refinement, adversarial training
//! against a SELU discriminator, and a semi-supervised mix of the two.

pub mod adversarial;
pub mod align;
pub mod corpus;
pub mod data;
pub mod error;
pub mod eval;
pub mod format;
pub mod linalg;
pub mod rng;
pub mod synth;

pub use adversarial::{Discriminator, GanConfig, TrainTrace};
pub use align::{AlignConfig, Method, ProjectionModel};
pub use corpus::{Report, Section, TfidfModel, WordVectorTable};
pub use data::{EmbeddingSet, LabelSet, Modality, PairSet};
pub use error::{Error, Result};
pub use eval::{MetricReport, RetrievalIndex, RetrievalResult};
pub use linalg::{Matrix, PcaModel};
pub use rng::RngState;
pub use synth::{SynthConfig, SynthDataset};
