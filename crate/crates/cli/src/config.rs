//! Experiment configuration: a sectioned TOML document.
//!
//! Every section is optional and every key has a default; unknown keys are
//! rejected. Relative paths in `[data]` resolve against the config file's
//! directory.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use jointspace::adversarial::{GanConfig, WInit};
use jointspace::align::{AlignConfig, InductionRule};
use jointspace::corpus::{Section, TfidfConfig};
use jointspace::eval::Direction;
use jointspace::synth::{GroundTruth, SynthConfig};
use jointspace::Method;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Base seed; per-run seeds are derived from it.
    pub seed: u64,
    pub data: DataConfig,
    pub synth: SynthSection,
    pub features: FeaturesConfig,
    pub reduction: ReductionConfig,
    pub method: MethodConfig,
    pub evaluation: EvaluationConfig,
    pub sweep: SweepConfig,
    pub output: OutputConfig,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataSource {
    /// Generate the dataset in memory from `[synth]`.
    #[default]
    Synth,
    /// Read the EMB/CSV files named in `[data]`.
    Files,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub source: DataSource,
    pub train_text: Option<PathBuf>,
    pub train_image: Option<PathBuf>,
    pub train_pairs: Option<PathBuf>,
    pub test_text: Option<PathBuf>,
    pub test_image: Option<PathBuf>,
    pub test_pairs: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    /// Report directory or concatenated report file, for `featurize`.
    pub corpus: Option<PathBuf>,
    pub word_vectors: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub n_train: usize,
    pub n_test: usize,
    pub latent_dim: usize,
    pub text_dim: usize,
    pub image_dim: usize,
    pub noise_sigma: f64,
    pub ground_truth: String,
    pub n_code_clusters: usize,
    pub codes_per_cluster: usize,
    /// Defaults to the top-level seed.
    pub seed: Option<u64>,
    pub spectrum_decay: f64,
    pub latent_clusters: usize,
    pub cluster_spread: f64,
}

impl Default for SynthSection {
    fn default() -> Self {
        let d = SynthConfig::default();
        SynthSection {
            n_train: d.n_train,
            n_test: d.n_test,
            latent_dim: d.latent_dim,
            text_dim: d.text_dim,
            image_dim: d.image_dim,
            noise_sigma: d.noise_sigma,
            ground_truth: d.ground_truth.to_string(),
            n_code_clusters: d.n_code_clusters,
            codes_per_cluster: d.codes_per_cluster,
            seed: None,
            spectrum_decay: d.spectrum_decay,
            latent_clusters: d.latent_clusters,
            cluster_spread: d.cluster_spread,
        }
    }
}

impl SynthSection {
    pub fn to_core(&self, base_seed: u64) -> CliResult<SynthConfig> {
        let ground_truth: GroundTruth = self
            .ground_truth
            .parse()
            .map_err(|_| key_error("synth.ground_truth", &self.ground_truth, "linear-random, orthogonal, permuted-identity"))?;
        let cfg = SynthConfig {
            n_train: self.n_train,
            n_test: self.n_test,
            latent_dim: self.latent_dim,
            text_dim: self.text_dim,
            image_dim: self.image_dim,
            noise_sigma: self.noise_sigma,
            ground_truth,
            n_code_clusters: self.n_code_clusters,
            codes_per_cluster: self.codes_per_cluster,
            seed: self.seed.unwrap_or(base_seed),
            spectrum_decay: self.spectrum_decay,
            latent_clusters: self.latent_clusters,
            cluster_spread: self.cluster_spread,
        };
        cfg.validate().map_err(|e| CliError::Config(format!("synth.{}", strip_prefix(e))))?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureKind {
    #[default]
    Tfidf,
    Wordvec,
    Precomputed,
}

impl FeatureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Tfidf => "tfidf",
            FeatureKind::Wordvec => "wordvec",
            FeatureKind::Precomputed => "precomputed",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeaturesConfig {
    pub kind: FeatureKind,
    pub sections: Vec<String>,
    pub ngram: usize,
    pub min_df: Option<usize>,
    pub l2_norm: bool,
}

impl Default for FeaturesConfig {
    fn default() -> Self {
        FeaturesConfig {
            kind: FeatureKind::Tfidf,
            sections: vec!["impression".into()],
            ngram: 1,
            min_df: None,
            l2_norm: true,
        }
    }
}

impl FeaturesConfig {
    pub fn sections(&self) -> CliResult<Vec<Section>> {
        parse_sections(&self.sections, "features.sections")
    }

    pub fn tfidf(&self) -> CliResult<TfidfConfig> {
        if !(1..=3).contains(&self.ngram) {
            return Err(CliError::Config(format!("features.ngram: must be 1, 2 or 3, got {}", self.ngram)));
        }
        let mut cfg = TfidfConfig::new(self.ngram);
        if let Some(m) = self.min_df {
            cfg.min_df = m;
        }
        cfg.l2_norm = self.l2_norm;
        Ok(cfg)
    }
}

fn parse_sections(names: &[String], key: &str) -> CliResult<Vec<Section>> {
    names
        .iter()
        .map(|s| {
            s.parse::<Section>()
                .map_err(|_| key_error(key, s, "impression, findings, indication, comparison, history, other"))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReductionConfig {
    /// Target PCA dimension for both modalities; 0 disables reduction.
    pub pca_dim: usize,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        ReductionConfig { pca_dim: 64 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MethodConfig {
    pub name: String,
    pub lambda: f64,
    pub beta: f64,
    /// Projection learning rate.
    pub learning_rate: f64,
    pub learning_rate_d: f64,
    pub lr_decay: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub d_steps: usize,
    pub smoothing: f64,
    pub hidden: usize,
    /// Orthogonality penalty; unset means on for adversarial methods, off for EA.
    pub ortho: Option<bool>,
    pub init: String,
    pub refinement_rounds: usize,
    pub dictionary_size: usize,
    pub induction: String,
    pub csls_k: usize,
    pub restarts: usize,
    /// Fraction of training pairs given to `align` for supervised methods.
    pub fraction: f64,
}

impl Default for MethodConfig {
    fn default() -> Self {
        let g = GanConfig::default();
        MethodConfig {
            name: "semi".into(),
            lambda: g.lambda,
            beta: g.beta,
            learning_rate: g.learning_rate_g,
            learning_rate_d: g.learning_rate_d,
            lr_decay: g.lr_decay,
            epochs: g.epochs,
            batch_size: g.batch_size,
            d_steps: g.d_steps_per_g_step,
            smoothing: g.smoothing,
            hidden: g.hidden,
            ortho: None,
            init: "glorot".into(),
            refinement_rounds: g.refinement_rounds,
            dictionary_size: g.dictionary_size,
            induction: "mutual-nn".into(),
            csls_k: 10,
            restarts: g.restarts,
            fraction: 1.0,
        }
    }
}

impl MethodConfig {
    pub fn method(&self) -> CliResult<Method> {
        self.name
            .parse()
            .map_err(|_| key_error("method.name", &self.name, "ea-closed, ea-grad, adv, adv-proc, semi"))
    }

    fn induction(&self) -> CliResult<InductionRule> {
        match self.induction.as_str() {
            "mutual-nn" => Ok(InductionRule::MutualNn),
            "csls" if self.csls_k >= 1 => Ok(InductionRule::Csls { k: self.csls_k }),
            "csls" => Err(CliError::Config("method.csls_k: must be at least 1".into())),
            other => Err(key_error("method.induction", other, "mutual-nn, csls")),
        }
    }

    fn ortho_for(&self, method: Method) -> bool {
        self.ortho
            .unwrap_or(!matches!(method, Method::EaClosed | Method::EaGrad))
    }

    pub fn gan(&self) -> CliResult<GanConfig> {
        let method = self.method()?;
        let init = match self.init.as_str() {
            "glorot" => WInit::Glorot,
            "identity" => WInit::Identity,
            other => return Err(key_error("method.init", other, "glorot, identity")),
        };
        let cfg = GanConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            d_steps_per_g_step: self.d_steps,
            learning_rate_d: self.learning_rate_d,
            learning_rate_g: self.learning_rate,
            lr_decay: self.lr_decay,
            lambda: self.lambda,
            smoothing: self.smoothing,
            hidden: self.hidden,
            beta: self.beta,
            ortho_enabled: self.ortho_for(method),
            init,
            refinement_rounds: self.refinement_rounds,
            dictionary_size: self.dictionary_size,
            induction: self.induction()?,
            restarts: self.restarts,
            ..GanConfig::default()
        };
        cfg.validate().map_err(|e| CliError::Config(format!("method: {}", strip_prefix(e))))?;
        Ok(cfg)
    }

    pub fn align(&self) -> CliResult<AlignConfig> {
        let method = self.method()?;
        let cfg = AlignConfig {
            beta: self.beta,
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            batch_size: self.batch_size,
            ortho_enabled: self.ortho_for(method),
            refinement_rounds: self.refinement_rounds,
            dictionary_size: self.dictionary_size,
            induction: self.induction()?,
        };
        cfg.validate().map_err(|e| CliError::Config(format!("method: {}", strip_prefix(e))))?;
        Ok(cfg)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    pub k: Vec<usize>,
    pub directions: Vec<String>,
    /// Repeat values; each becomes a derived per-run seed.
    pub seeds: Vec<u64>,
    pub ndcg: bool,
    /// Candidate count for `baseline`; defaults to the test image count.
    pub chance_population: Option<usize>,
    /// Queries per seed for `baseline`; defaults to the test text count.
    pub chance_queries: Option<usize>,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            k: vec![1, 10, 100],
            directions: vec!["t2i".into(), "i2t".into()],
            seeds: vec![0, 1, 2, 3, 4],
            ndcg: true,
            chance_population: None,
            chance_queries: None,
        }
    }
}

impl EvaluationConfig {
    pub fn directions(&self) -> CliResult<Vec<Direction>> {
        if self.directions.is_empty() {
            return Err(CliError::Config("evaluation.directions: at least one direction is required".into()));
        }
        let mut out: Vec<Direction> = Vec::new();
        for d in &self.directions {
            let dir = d.parse().map_err(|_| key_error("evaluation.directions", d, "t2i, i2t"))?;
            if !out.contains(&dir) {
                out.push(dir);
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub fractions: Vec<f64>,
    /// Report sections to compare; empty runs the fraction grid only.
    pub sections: Vec<String>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            fractions: vec![0.0, 0.001, 0.01, 0.1, 1.0],
            sections: Vec::new(),
        }
    }
}

impl SweepConfig {
    pub fn sections(&self) -> CliResult<Vec<Section>> {
        parse_sections(&self.sections, "sweep.sections")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("out") }
    }
}

fn key_error(key: &str, value: &str, expected: &str) -> CliError {
    CliError::Config(format!("{key}: unknown value `{value}` (expected one of: {expected})"))
}

fn strip_prefix(e: jointspace::Error) -> String {
    match e {
        jointspace::Error::Config(m) | jointspace::Error::Param(m) => m,
        other => other.to_string(),
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string().trim_end().to_string()))
    }

    /// Reads a config file and resolves `[data]` paths against its directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.data.resolve(base);
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks every key that has a constrained value.
    pub fn validate(&self) -> CliResult<()> {
        self.method.gan()?;
        self.method.align()?;
        self.features.sections()?;
        self.features.tfidf()?;
        self.sweep.sections()?;
        self.evaluation.directions()?;
        if self.data.source == DataSource::Synth {
            self.synth.to_core(self.seed)?;
        }
        if !(0.0..=1.0).contains(&self.method.fraction) {
            return Err(CliError::Config(format!("method.fraction: {} outside [0, 1]", self.method.fraction)));
        }
        if let Some(f) = self.sweep.fractions.iter().find(|f| !(0.0..=1.0).contains(*f)) {
            return Err(CliError::Config(format!("sweep.fractions: {f} outside [0, 1]")));
        }
        if self.evaluation.k.contains(&0) {
            return Err(CliError::Config("evaluation.k: cutoffs must be at least 1".into()));
        }
        let seeds = &self.evaluation.seeds;
        if seeds.is_empty() || seeds.iter().collect::<BTreeSet<_>>().len() != seeds.len() {
            return Err(CliError::Config("evaluation.seeds: need at least one seed and no duplicates".into()));
        }
        if seeds.len() < 5 {
            log::warn!("evaluation.seeds has {} values; at least 5 are recommended for intervals", seeds.len());
        }
        Ok(())
    }
}

impl DataConfig {
    fn resolve(&mut self, base: &Path) {
        for p in [
            &mut self.train_text,
            &mut self.train_image,
            &mut self.train_pairs,
            &mut self.test_text,
            &mut self.test_image,
            &mut self.test_pairs,
            &mut self.labels,
            &mut self.corpus,
            &mut self.word_vectors,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn require<'a>(&self, path: &'a Option<PathBuf>, key: &str) -> CliResult<&'a Path> {
        path.as_deref()
            .ok_or_else(|| CliError::Config(format!("data.{key}: required for this command")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg = ExperimentConfig::from_toml("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.reduction.pca_dim, 64);
        assert_eq!(cfg.method.lambda, 0.1);
        assert_eq!(cfg.method.beta, 0.01);
        assert_eq!(cfg.evaluation.k, vec![1, 10, 100]);
        assert_eq!(cfg.evaluation.seeds.len(), 5);
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_keys_rejected() {
        let e = ExperimentConfig::from_toml("[method]\nlamda = 0.2\n").unwrap_err();
        assert!(e.to_string().contains("lamda"), "{e}");
        assert!(ExperimentConfig::from_toml("[nonsense]\n").is_err());
    }

    #[test]
    fn invalid_values_name_their_key() {
        let cfg = ExperimentConfig::from_toml("[synth]\nground_truth = \"wobbly\"\n").unwrap();
        let e = cfg.validate().unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("synth.ground_truth"), "{e}");

        let cfg = ExperimentConfig::from_toml("[method]\nname = \"magic\"\n").unwrap();
        assert!(cfg.validate().unwrap_err().to_string().contains("method.name"));

        let cfg = ExperimentConfig::from_toml("[evaluation]\nseeds = [1, 1, 2]\n").unwrap();
        assert!(cfg.validate().unwrap_err().to_string().contains("evaluation.seeds"));
    }

    #[test]
    fn ortho_default_depends_on_method() {
        let mut m = MethodConfig::default();
        assert!(m.gan().unwrap().ortho_enabled);
        m.name = "ea-grad".into();
        assert!(!m.align().unwrap().ortho_enabled);
        m.ortho = Some(true);
        assert!(m.align().unwrap().ortho_enabled);
    }

    #[test]
    fn round_trips_through_toml() {
        let mut cfg = ExperimentConfig::default();
        cfg.method.name = "adv-proc".into();
        cfg.data.train_text = Some("a/b.emb".into());
        let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn relative_paths_resolve_against_config_dir() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.toml");
        std::fs::write(&path, "[data]\nsource = \"files\"\ntrain_text = \"feat/t.emb\"\n").unwrap();
        let cfg = ExperimentConfig::load(&path).unwrap();
        assert_eq!(cfg.data.train_text.unwrap(), dir.path().join("feat/t.emb"));
    }
}
