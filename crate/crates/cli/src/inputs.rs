//! Loading train/test features, pairs and labels, and PCA reduction.

use std::collections::HashSet;

use jointspace::corpus::{average_word_vectors, fit_tfidf, read_corpus, read_word_vectors, tokenize, Report, Section};
use jointspace::format::{read_embeddings, read_labels, read_pairs};
use jointspace::linalg::{fit_pca, Matrix};
use jointspace::synth::{generate, SynthDataset};
use jointspace::{EmbeddingSet, LabelSet, Modality, PairSet};

use crate::config::{DataSource, ExperimentConfig, FeatureKind, FeaturesConfig};
use crate::error::{CliError, CliResult};
use crate::manifest::Run;

#[derive(Clone, Debug)]
pub struct Inputs {
    pub train_text: EmbeddingSet,
    pub train_image: EmbeddingSet,
    pub train_pairs: PairSet,
    pub test_text: EmbeddingSet,
    pub test_image: EmbeddingSet,
    pub test_pairs: PairSet,
    pub labels: Option<LabelSet>,
}

impl From<SynthDataset> for Inputs {
    fn from(ds: SynthDataset) -> Self {
        Inputs {
            train_text: ds.train_text,
            train_image: ds.train_image,
            train_pairs: ds.train_pairs,
            test_text: ds.test_text,
            test_image: ds.test_image,
            test_pairs: ds.test_pairs,
            labels: Some(ds.labels),
        }
    }
}

/// Reads or generates the inputs named by the config.
pub fn load(cfg: &ExperimentConfig, run: &mut Run) -> CliResult<Inputs> {
    match cfg.data.source {
        DataSource::Synth => Ok(generate(&cfg.synth.to_core(cfg.seed)?)?.into()),
        DataSource::Files => {
            let d = &cfg.data;
            let mut emb = |key: &str, p: &Option<std::path::PathBuf>, m: Modality| -> CliResult<EmbeddingSet> {
                let path = d.require(p, key)?;
                run.input(path)?;
                Ok(read_embeddings(path, m)?)
            };
            let train_text = emb("train_text", &d.train_text, Modality::Text)?;
            let train_image = emb("train_image", &d.train_image, Modality::Image)?;
            let test_text = emb("test_text", &d.test_text, Modality::Text)?;
            let test_image = emb("test_image", &d.test_image, Modality::Image)?;
            let mut pairs = |key: &str, p: &Option<std::path::PathBuf>| -> CliResult<PairSet> {
                let path = d.require(p, key)?;
                run.input(path)?;
                Ok(read_pairs(path)?)
            };
            let train_pairs = pairs("train_pairs", &d.train_pairs)?;
            let test_pairs = pairs("test_pairs", &d.test_pairs)?;
            let labels = match &d.labels {
                Some(p) => {
                    run.input(p)?;
                    Some(read_labels(p)?)
                }
                None => None,
            };
            Ok(Inputs {
                train_text,
                train_image,
                train_pairs,
                test_text,
                test_image,
                test_pairs,
                labels,
            })
        }
    }
}

fn pca_pair(train: &EmbeddingSet, test: &EmbeddingSet, k: usize, what: &str) -> CliResult<(EmbeddingSet, EmbeddingSet)> {
    if k > train.dim() {
        return Err(CliError::Config(format!(
            "reduction.pca_dim: {k} exceeds the {what} feature dimension {}",
            train.dim()
        )));
    }
    let model = fit_pca(train.vectors(), k)?;
    Ok((
        train.with_vectors(model.transform(train.vectors())?)?,
        test.with_vectors(model.transform(test.vectors())?)?,
    ))
}

impl Inputs {
    /// PCA per modality, fitted on the training split only; `k = 0` is a no-op.
    pub fn reduce(&self, k: usize) -> CliResult<Inputs> {
        if k == 0 {
            return Ok(self.clone());
        }
        let (train_text, test_text) = pca_pair(&self.train_text, &self.test_text, k, "text")?;
        let (train_image, test_image) = pca_pair(&self.train_image, &self.test_image, k, "image")?;
        Ok(Inputs {
            train_text,
            train_image,
            test_text,
            test_image,
            ..self.clone()
        })
    }

    /// Replaces text features, dropping pairs whose text has no vector.
    pub fn with_text_features(&self, features: &EmbeddingSet) -> CliResult<Inputs> {
        let keep = |pairs: &PairSet| -> PairSet {
            pairs
                .iter()
                .filter(|(t, _)| features.position(t).is_some())
                .map(|(t, i)| (t.to_string(), i.to_string()))
                .collect()
        };
        let present = |set: &EmbeddingSet| -> Vec<String> {
            set.ids().iter().filter(|id| features.position(id).is_some()).cloned().collect()
        };
        let out = Inputs {
            train_text: features.subset(&present(&self.train_text))?,
            test_text: features.subset(&present(&self.test_text))?,
            train_pairs: keep(&self.train_pairs),
            test_pairs: keep(&self.test_pairs),
            ..self.clone()
        };
        if out.train_text.is_empty() || out.test_text.is_empty() {
            return Err(CliError::Data("no train or test report has the requested section".into()));
        }
        Ok(out)
    }

    /// `(text column, image column)` indices of training pairs.
    pub fn train_pair_indices(&self, pairs: &PairSet) -> CliResult<Vec<(usize, usize)>> {
        pair_indices(pairs, &self.train_text, &self.train_image)
    }
}

pub fn pair_indices(pairs: &PairSet, text: &EmbeddingSet, image: &EmbeddingSet) -> CliResult<Vec<(usize, usize)>> {
    pairs
        .iter()
        .map(|(t, i)| match (text.position(t), image.position(i)) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err(CliError::Data(format!("pair ({t}, {i}) references an id missing from the features"))),
        })
        .collect()
}

/// Text vectors for one report section, with ids of reports lacking it.
pub struct SectionFeatures {
    pub set: EmbeddingSet,
    pub skipped: Vec<String>,
}

/// Featurizes one section of every report. TF-IDF is fitted on `fit_ids`
/// when given (the training reports), otherwise on all reports with the section.
pub fn featurize_section(
    reports: &[Report],
    section: Section,
    features: &FeaturesConfig,
    word_vectors: Option<&jointspace::WordVectorTable>,
    fit_ids: Option<&HashSet<String>>,
) -> CliResult<SectionFeatures> {
    let mut ids = Vec::new();
    let mut docs = Vec::new();
    let mut skipped = Vec::new();
    for r in reports {
        match r.section(section) {
            Some(body) => {
                ids.push(r.id.clone());
                docs.push(tokenize(body));
            }
            None => skipped.push(r.id.clone()),
        }
    }
    if ids.is_empty() {
        return Err(CliError::Data(format!("no report has a `{}` section; the corpus is empty", section.as_str())));
    }
    let vectors = match features.kind {
        FeatureKind::Tfidf => {
            let fit_docs: Vec<Vec<String>> = match fit_ids {
                Some(f) => ids.iter().zip(&docs).filter(|(id, _)| f.contains(*id)).map(|(_, d)| d.clone()).collect(),
                None => docs.clone(),
            };
            let model = fit_tfidf(&fit_docs, features.tfidf()?)?;
            model.transform_dense(&docs)
        }
        FeatureKind::Wordvec => {
            let table = word_vectors.ok_or_else(|| CliError::Config("data.word_vectors: required for wordvec features".into()))?;
            let mut rows = Vec::with_capacity(docs.len());
            let mut oov = 0;
            for d in &docs {
                let avg = average_word_vectors(table, d);
                oov += usize::from(avg.all_oov());
                rows.push(avg.vector);
            }
            if oov > 0 {
                log::warn!("{oov} `{}` sections have no in-vocabulary token and get a zero vector", section.as_str());
            }
            Matrix::from_rows(&rows)?
        }
        FeatureKind::Precomputed => {
            return Err(CliError::Config("features.kind: precomputed features need no featurization".into()))
        }
    };
    Ok(SectionFeatures {
        set: EmbeddingSet::new(ids, vectors, Modality::Text)?,
        skipped,
    })
}

pub fn load_corpus(cfg: &ExperimentConfig, run: &mut Run) -> CliResult<(Vec<Report>, Option<jointspace::WordVectorTable>)> {
    let path = cfg.data.require(&cfg.data.corpus, "corpus")?;
    run.input(path)?;
    let reports = read_corpus(path)?;
    let table = match (&cfg.data.word_vectors, cfg.features.kind) {
        (Some(p), FeatureKind::Wordvec) => {
            run.input(p)?;
            let f = std::fs::File::open(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
            Some(read_word_vectors(std::io::BufReader::new(f), &p.display().to_string())?)
        }
        _ => None,
    };
    Ok((reports, table))
}
