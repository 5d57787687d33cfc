//! The subcommands. Each writes into its own directory under the output
//! root and finishes with a `manifest.json` there.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use jointspace::corpus::Section;
use jointspace::eval::{chance_mrr, chance_ndcg, expected_random_mrr, Direction, Relevance};
use jointspace::format::{emb_to_string, fmt_f64, labels_to_bytes, model_to_string, pairs_to_bytes, read_model};
use jointspace::rng::derive_seed;
use jointspace::synth::{generate, split_supervision};
use jointspace::{Method, ProjectionModel};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::inputs::{featurize_section, load, load_corpus, Inputs};
use crate::manifest::{RefinementRecord, Run};
use crate::pipeline::{evaluate, fit, metrics_csv, summarize, summary_csv, MetricValue, SummaryRow};

/// Writes the generated dataset: train/test EMB and pair files, labels, W*.
pub fn cmd_synth(cfg: &ExperimentConfig, out: &Path) -> CliResult<Vec<PathBuf>> {
    cfg.validate()?;
    let mut run = Run::new("synth", cfg, out.join("synth"));
    run.stage("generate");
    let ds = generate(&cfg.synth.to_core(cfg.seed)?)?;
    run.stage("write");
    for (split, text, image, pairs) in [
        ("train", &ds.train_text, &ds.train_image, &ds.train_pairs),
        ("test", &ds.test_text, &ds.test_image, &ds.test_pairs),
    ] {
        run.write(&format!("{split}/text.emb"), emb_to_string(text).as_bytes())?;
        run.write(&format!("{split}/image.emb"), emb_to_string(image).as_bytes())?;
        run.write(&format!("{split}/pairs.csv"), &pairs_to_bytes(pairs)?)?;
    }
    run.write("labels.csv", &labels_to_bytes(&ds.labels)?)?;
    let w_star = ProjectionModel::new(ds.w_star.clone(), Method::EaClosed, cfg.seed, Default::default());
    run.write("wstar.mdl", model_to_string(&w_star).as_bytes())?;
    run.finish()
}

/// One EMB file per configured section, plus a skip list of reports lacking it.
pub fn cmd_featurize(cfg: &ExperimentConfig, out: &Path) -> CliResult<Vec<PathBuf>> {
    cfg.validate()?;
    let mut run = Run::new("featurize", cfg, out.join("features"));
    run.stage("read corpus");
    let (reports, table) = load_corpus(cfg, &mut run)?;
    let fit_ids = training_text_ids(cfg, &mut run)?;
    for section in cfg.features.sections()? {
        run.stage(&format!("featurize {}", section.as_str()));
        let f = featurize_section(&reports, section, &cfg.features, table.as_ref(), fit_ids.as_ref())?;
        let stem = format!("{}-{}", section.as_str(), cfg.features.kind.as_str());
        run.write(&format!("{stem}.emb"), emb_to_string(&f.set).as_bytes())?;
        let mut skipped = f.skipped.join("\n");
        if !skipped.is_empty() {
            skipped.push('\n');
            log::warn!("{} reports lack a `{}` section", f.skipped.len(), section.as_str());
        }
        run.write(&format!("{stem}-skipped.txt"), skipped.as_bytes())?;
    }
    run.finish()
}

/// Text ids of the training pairs, when a pair file is configured.
fn training_text_ids(cfg: &ExperimentConfig, run: &mut Run) -> CliResult<Option<HashSet<String>>> {
    match &cfg.data.train_pairs {
        Some(p) => {
            run.input(p)?;
            let pairs = jointspace::format::read_pairs(p)?;
            Ok(Some(pairs.iter().map(|(t, _)| t.to_string()).collect()))
        }
        None => Ok(None),
    }
}

/// PCA-reduced copies of the train and test features.
pub fn cmd_pca(cfg: &ExperimentConfig, out: &Path) -> CliResult<Vec<PathBuf>> {
    cfg.validate()?;
    let mut run = Run::new("pca", cfg, out.join("reduced"));
    run.stage("load");
    let inputs = load(cfg, &mut run)?;
    run.stage("reduce");
    let reduced = inputs.reduce(cfg.reduction.pca_dim)?;
    run.stage("write");
    for (rel, set) in [
        ("train/text.emb", &reduced.train_text),
        ("train/image.emb", &reduced.train_image),
        ("test/text.emb", &reduced.test_text),
        ("test/image.emb", &reduced.test_image),
    ] {
        run.write(rel, emb_to_string(set).as_bytes())?;
    }
    run.finish()
}

fn model_stem(method: Method, repeat: u64) -> String {
    format!("{method}-s{repeat}")
}

/// Supervised pairs for one run: `round(fraction · n)` training pairs.
fn supervision(inputs: &Inputs, fraction: f64, seed: u64) -> CliResult<Vec<(usize, usize)>> {
    let (sup, _, _) = split_supervision(&inputs.train_pairs, fraction, seed)?;
    inputs.train_pair_indices(&sup)
}

fn record_refinement(run: &mut Run, name: &str, model: &ProjectionModel) {
    if let Some(r) = &model.refinement {
        run.refinement(RefinementRecord {
            run: name.to_string(),
            rounds: r.rounds,
            chosen_round: r.chosen_round,
            restart: r.restart,
            mean_similarity: r.mean_similarity,
        });
    }
}

/// Trains one model per configured seed and writes it with its trace.
pub fn cmd_align(cfg: &ExperimentConfig, out: &Path) -> CliResult<Vec<PathBuf>> {
    cfg.validate()?;
    let method = cfg.method.method()?;
    let mut run = Run::new("align", cfg, out.join("models"));
    run.stage("load");
    let inputs = load(cfg, &mut run)?.reduce(cfg.reduction.pca_dim)?;
    for &repeat in &cfg.evaluation.seeds {
        let seed = derive_seed(cfg.seed, 0, repeat);
        let stem = model_stem(method, repeat);
        run.stage(&format!("train {stem}"));
        let pairs = supervision(&inputs, cfg.method.fraction, seed)?;
        let (model, trace) = fit(&cfg.method, &inputs, &pairs, seed)?;
        record_refinement(&mut run, &stem, &model);
        run.write(&format!("{stem}.mdl"), model_to_string(&model).as_bytes())?;
        if let Some(t) = trace {
            run.write(&format!("{stem}-trace.csv"), t.to_csv().as_bytes())?;
        }
    }
    run.finish()
}

/// Evaluates the models written by `align` for the same config.
pub fn cmd_evaluate(cfg: &ExperimentConfig, out: &Path) -> CliResult<Vec<PathBuf>> {
    cfg.validate()?;
    let method = cfg.method.method()?;
    let mut run = Run::new("evaluate", cfg, out.join("eval"));
    run.stage("load");
    let inputs = load(cfg, &mut run)?.reduce(cfg.reduction.pca_dim)?;
    let mut per_seed = Vec::new();
    for &repeat in &cfg.evaluation.seeds {
        let path = out.join("models").join(format!("{}.mdl", model_stem(method, repeat)));
        if !path.exists() {
            return Err(CliError::Data(format!("{}: model not found; run `align` first", path.display())));
        }
        run.input(&path)?;
        let model = read_model(&path)?;
        run.stage(&format!("evaluate {}", model_stem(method, repeat)));
        per_seed.push((repeat, evaluate(&model, &inputs, &cfg.evaluation)?));
    }
    write_metric_files(&mut run, "", &per_seed)?;
    run.finish()
}

fn write_metric_files(run: &mut Run, prefix: &str, per_seed: &[(u64, Vec<MetricValue>)]) -> CliResult<Vec<SummaryRow>> {
    let summary = summarize(per_seed)?;
    run.write(&format!("{prefix}metrics.csv"), metrics_csv(per_seed).as_bytes())?;
    run.write(&format!("{prefix}summary.csv"), summary_csv(&summary).as_bytes())?;
    Ok(summary)
}

/// Summary of one sweep cell group.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepCell {
    pub section: Option<Section>,
    pub fraction: f64,
    pub summary: Vec<SummaryRow>,
}

#[derive(Clone, Debug)]
pub struct SweepOutcome {
    pub cells: Vec<SweepCell>,
    pub files: Vec<PathBuf>,
}

impl SweepOutcome {
    /// Mean of `metric` (direction, k) at each fraction, in sweep order.
    pub fn series(&self, section: Option<Section>, metric: &str, direction: Option<Direction>, k: Option<usize>) -> Vec<(f64, f64)> {
        self.cells
            .iter()
            .filter(|c| c.section == section)
            .filter_map(|c| {
                c.summary
                    .iter()
                    .find(|r| r.metric == metric && r.direction == direction && r.k == k)
                    .map(|r| (c.fraction, r.mean))
            })
            .collect()
    }
}

/// Supervision-fraction grid × seeds, optionally per report section.
/// Any failing cell aborts the sweep.
pub fn cmd_sweep(cfg: &ExperimentConfig, out: &Path) -> CliResult<SweepOutcome> {
    cfg.validate()?;
    if cfg.sweep.fractions.is_empty() {
        return Err(CliError::Config("sweep.fractions: at least one fraction is required".into()));
    }
    let method = cfg.method.method()?;
    if method.requires_pairs() && cfg.sweep.fractions.contains(&0.0) {
        return Err(CliError::Config(format!(
            "sweep.fractions: fraction 0 gives {method} no pairs; use semi or drop 0"
        )));
    }
    let mut run = Run::new("sweep", cfg, out.join("sweep"));
    run.stage("load");
    let base = load(cfg, &mut run)?;
    let sections = cfg.sweep.sections()?;
    let groups: Vec<(Option<Section>, Inputs)> = if sections.is_empty() {
        vec![(None, base.reduce(cfg.reduction.pca_dim)?)]
    } else {
        run.stage("featurize sections");
        let (reports, table) = load_corpus(cfg, &mut run)?;
        let fit: HashSet<String> = base.train_text.ids().iter().cloned().collect();
        let mut g = Vec::new();
        for s in sections {
            let f = featurize_section(&reports, s, &cfg.features, table.as_ref(), Some(&fit))?;
            g.push((Some(s), base.with_text_features(&f.set)?.reduce(cfg.reduction.pca_dim)?));
        }
        g
    };

    let mut cells = Vec::new();
    let mut fraction_csv = String::from("section,fraction,metric,direction,k,mean,ci95\n");
    for (section, inputs) in &groups {
        let sec_prefix = section.map_or(String::new(), |s| format!("{}/", s.as_str()));
        for (fi, &fraction) in cfg.sweep.fractions.iter().enumerate() {
            let cell_prefix = format!("{sec_prefix}f{fraction}/");
            let mut per_seed = Vec::new();
            for &repeat in &cfg.evaluation.seeds {
                let seed = derive_seed(cfg.seed, fi as u64, repeat);
                let stem = model_stem(method, repeat);
                run.stage(&format!("{cell_prefix}{stem}"));
                let pairs = supervision(inputs, fraction, seed)?;
                let (model, trace) = fit(&cfg.method, inputs, &pairs, seed)?;
                record_refinement(&mut run, &format!("{cell_prefix}{stem}"), &model);
                run.write(&format!("{cell_prefix}{stem}.mdl"), model_to_string(&model).as_bytes())?;
                if let Some(t) = trace {
                    run.write(&format!("{cell_prefix}{stem}-trace.csv"), t.to_csv().as_bytes())?;
                }
                per_seed.push((repeat, evaluate(&model, inputs, &cfg.evaluation)?));
            }
            let summary = write_metric_files(&mut run, &cell_prefix, &per_seed)?;
            let sec = section.map_or("", |s| s.as_str());
            for r in &summary {
                fraction_csv.push_str(&format!("{sec},{fraction},{}\n", r.csv_fields()));
            }
            cells.push(SweepCell {
                section: *section,
                fraction,
                summary,
            });
        }
    }
    run.write("fraction.csv", fraction_csv.as_bytes())?;
    if groups.len() > 1 || groups[0].0.is_some() {
        let mut by_section = String::from("section,fraction,metric,direction,k,mean,ci95\n");
        // section comparison at the largest fraction
        let top = cfg.sweep.fractions.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for c in cells.iter().filter(|c| c.fraction == top) {
            for r in &c.summary {
                by_section.push_str(&format!(
                    "{},{},{}\n",
                    c.section.map_or("", |s| s.as_str()),
                    c.fraction,
                    r.csv_fields()
                ));
            }
        }
        run.write("sections.csv", by_section.as_bytes())?;
    }
    let files = run.finish()?;
    Ok(SweepOutcome { cells, files })
}

/// Chance-level MRR (simulated and analytic) and nDCG for the test split.
pub fn cmd_baseline(cfg: &ExperimentConfig, out: &Path) -> CliResult<Vec<PathBuf>> {
    cfg.validate()?;
    let mut run = Run::new("baseline", cfg, out.join("baseline"));
    run.stage("load");
    let inputs = load(cfg, &mut run)?;
    let population = cfg.evaluation.chance_population.unwrap_or(inputs.test_image.len());
    let queries = cfg.evaluation.chance_queries.unwrap_or(inputs.test_text.len());
    let seeds: Vec<u64> = cfg.evaluation.seeds.iter().map(|&s| derive_seed(cfg.seed, 0, s)).collect();

    run.stage("simulate");
    let mut rows = Vec::new();
    let mrr = chance_mrr(population, queries, &seeds)?;
    rows.push(("mrr_chance".to_string(), "t2i", String::new(), mrr.mean, mrr.ci95_halfwidth));
    rows.push(("mrr_analytic".to_string(), "t2i", String::new(), expected_random_mrr(population), 0.0));
    let mut per_seed = String::from("metric,direction,k,seed,value\n");
    for (repeat, v) in cfg.evaluation.seeds.iter().zip(&mrr.per_seed) {
        per_seed.push_str(&format!("mrr_chance,t2i,,{repeat},{}\n", fmt_f64(*v)));
    }
    if cfg.evaluation.ndcg && !cfg.evaluation.k.is_empty() {
        let labels = inputs.labels.as_ref().ok_or_else(|| {
            CliError::Config("data.labels: nDCG is requested (evaluation.ndcg) but no label file is configured".into())
        })?;
        for dir in cfg.evaluation.directions()? {
            let (q, c) = match dir {
                Direction::TextToImage => (inputs.test_text.ids(), inputs.test_image.ids()),
                Direction::ImageToText => (inputs.test_image.ids(), inputs.test_text.ids()),
            };
            let rel = Relevance::from_labels(labels, q, c)?;
            let rels: Vec<Vec<f64>> = (0..q.len()).map(|i| rel.row(i)).collect();
            for &k in &cfg.evaluation.k {
                let r = chance_ndcg(&rels, k, &seeds)?;
                rows.push(("ndcg_chance".to_string(), dir.as_str(), k.to_string(), r.mean, r.ci95_halfwidth));
                for (repeat, v) in cfg.evaluation.seeds.iter().zip(&r.per_seed) {
                    per_seed.push_str(&format!("ndcg_chance,{dir},{k},{repeat},{}\n", fmt_f64(*v)));
                }
            }
        }
    }
    let mut summary = String::from("metric,direction,k,mean,ci95\n");
    for (m, d, k, mean, ci) in rows {
        summary.push_str(&format!("{m},{d},{k},{},{}\n", fmt_f64(mean), fmt_f64(ci)));
    }
    run.write("metrics.csv", per_seed.as_bytes())?;
    run.write("summary.csv", summary.as_bytes())?;
    run.finish()
}
