//! Report parsing and text featurization.

mod report;
mod tfidf;
mod tokenize;
mod wordvec;

pub use report::{parse_report, read_corpus, Report, Section};
pub use tfidf::{fit_tfidf, SparseVector, TfidfConfig, TfidfModel};
pub use tokenize::tokenize;
pub use wordvec::{average_word_vectors, read_word_vectors, AveragedVector, WordVectorTable};
