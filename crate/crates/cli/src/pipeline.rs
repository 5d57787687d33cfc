//! Model fitting and evaluation shared by the subcommands.

use jointspace::adversarial::{train_adversarial, train_adversarial_refined, train_semi_supervised, TrainTrace};
use jointspace::align::{fit_ea_closed, fit_ea_gradient};
use jointspace::eval::{aggregate_ci, evaluate_direction, mean_pair_cosine, Direction, Relevance, RetrievalIndex};
use jointspace::format::fmt_f64;
use jointspace::{Method, Modality, ProjectionModel};

use crate::config::{EvaluationConfig, MethodConfig};
use crate::error::{CliError, CliResult};
use crate::inputs::{pair_indices, Inputs};

/// Trains one model on the training split. `pairs` are the supervised
/// `(text column, image column)` indices available to the method.
pub fn fit(
    method_cfg: &MethodConfig,
    inputs: &Inputs,
    pairs: &[(usize, usize)],
    seed: u64,
) -> CliResult<(ProjectionModel, Option<TrainTrace>)> {
    let method = method_cfg.method()?;
    let x = inputs.train_text.vectors().transpose();
    let y = inputs.train_image.vectors().transpose();
    if method.requires_pairs() && pairs.is_empty() {
        return Err(CliError::Config(format!(
            "method.name: {method} needs supervised pairs, but none are available (check method.fraction and data.train_pairs)"
        )));
    }
    if method.requires_square() && x.rows() != y.rows() {
        return Err(CliError::Config(format!(
            "method.name: {method} needs equal text and image dimensions, got {} and {}",
            x.rows(),
            y.rows()
        )));
    }
    let columns = || {
        let t: Vec<usize> = pairs.iter().map(|p| p.0).collect();
        let i: Vec<usize> = pairs.iter().map(|p| p.1).collect();
        (x.select_columns(&t), y.select_columns(&i))
    };
    Ok(match method {
        Method::EaClosed => {
            let (xs, ys) = columns();
            let mut m = fit_ea_closed(&xs, &ys)?;
            m.seed = seed;
            m.config = method_cfg.align()?;
            (m, None)
        }
        Method::EaGrad => {
            let (xs, ys) = columns();
            (fit_ea_gradient(&xs, &ys, &method_cfg.align()?, seed)?, None)
        }
        Method::Adv => {
            let (m, t) = train_adversarial(&x, &y, &method_cfg.gan()?, seed)?;
            (m, Some(t))
        }
        Method::AdvProc => {
            let (m, t) = train_adversarial_refined(&x, &y, &method_cfg.gan()?, seed)?;
            (m, Some(t))
        }
        Method::Semi => {
            let (m, t) = train_semi_supervised(&x, &y, pairs, &method_cfg.gan()?, seed)?;
            (m, Some(t))
        }
    })
}

/// One per-seed metric value.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricValue {
    pub metric: &'static str,
    pub direction: Option<Direction>,
    pub k: Option<usize>,
    pub value: f64,
}

/// Held-out metrics of `model` on the test split: MRR, P@1 and nDCG@k per
/// direction, plus the mean cosine of true test pairs.
pub fn evaluate(model: &ProjectionModel, inputs: &Inputs, cfg: &EvaluationConfig) -> CliResult<Vec<MetricValue>> {
    let directions = cfg.directions()?;
    let labels = match (&inputs.labels, cfg.ndcg && !cfg.k.is_empty()) {
        (Some(l), true) => Some(l),
        (None, true) => {
            return Err(CliError::Config(
                "data.labels: nDCG is requested (evaluation.ndcg) but no label file is configured".into(),
            ))
        }
        (_, false) => None,
    };
    let text = &inputs.test_text;
    let image = &inputs.test_image;
    let projected = model.project_rows(text.vectors())?;
    let pairs = pair_indices(&inputs.test_pairs, text, image)?;
    let mut out = Vec::new();
    for dir in directions {
        let (query_ids, queries, index, relevant, relevance) = match dir {
            Direction::TextToImage => {
                let mut rel = vec![Vec::new(); text.len()];
                for &(t, i) in &pairs {
                    rel[t].push(i);
                }
                let r = labels
                    .map(|l| Relevance::from_labels(l, text.ids(), image.ids()))
                    .transpose()?;
                (text.ids(), projected.clone(), RetrievalIndex::from_set(image)?, rel, r)
            }
            Direction::ImageToText => {
                let mut rel = vec![Vec::new(); image.len()];
                for &(t, i) in &pairs {
                    rel[i].push(t);
                }
                let r = labels
                    .map(|l| Relevance::from_labels(l, image.ids(), text.ids()))
                    .transpose()?;
                let index = RetrievalIndex::new(text.ids().to_vec(), projected.clone(), Modality::Text)?;
                (image.ids(), image.vectors().clone(), index, rel, r)
            }
        };
        let m = evaluate_direction(query_ids, &queries, &index, &relevant, relevance.as_ref(), &cfg.k, dir)?;
        out.push(MetricValue {
            metric: "mrr",
            direction: Some(dir),
            k: None,
            value: m.mrr,
        });
        out.push(MetricValue {
            metric: "p_at_1",
            direction: Some(dir),
            k: None,
            value: m.precision_at_1,
        });
        for (k, v) in m.ndcg {
            out.push(MetricValue {
                metric: "ndcg",
                direction: Some(dir),
                k: Some(k),
                value: v,
            });
        }
    }
    out.push(MetricValue {
        metric: "similarity",
        direction: None,
        k: None,
        value: mean_pair_cosine(&projected, image.vectors(), &pairs)?,
    });
    Ok(out)
}

fn direction_str(d: Option<Direction>) -> &'static str {
    d.map_or("both", Direction::as_str)
}

fn k_str(k: Option<usize>) -> String {
    k.map_or(String::new(), |k| k.to_string())
}

pub const METRICS_HEADER: &str = "metric,direction,k,seed,value";
pub const SUMMARY_HEADER: &str = "metric,direction,k,mean,ci95";

/// Per-seed metric CSV.
pub fn metrics_csv(per_seed: &[(u64, Vec<MetricValue>)]) -> String {
    let mut out = format!("{METRICS_HEADER}\n");
    for (seed, values) in per_seed {
        for v in values {
            out.push_str(&format!(
                "{},{},{},{seed},{}\n",
                v.metric,
                direction_str(v.direction),
                k_str(v.k),
                fmt_f64(v.value)
            ));
        }
    }
    out
}

/// Mean and 95% halfwidth of one metric across seeds.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub metric: String,
    pub direction: Option<Direction>,
    pub k: Option<usize>,
    pub mean: f64,
    pub ci95: f64,
}

impl SummaryRow {
    pub fn key(&self) -> (String, &'static str, String) {
        (self.metric.clone(), direction_str(self.direction), k_str(self.k))
    }

    pub fn csv_fields(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.metric,
            direction_str(self.direction),
            k_str(self.k),
            fmt_f64(self.mean),
            fmt_f64(self.ci95)
        )
    }
}

/// Aggregates per-seed values, keeping first-seen metric order.
pub fn summarize(per_seed: &[(u64, Vec<MetricValue>)]) -> CliResult<Vec<SummaryRow>> {
    let Some((_, first)) = per_seed.first() else {
        return Ok(Vec::new());
    };
    let mut rows = Vec::with_capacity(first.len());
    for (i, proto) in first.iter().enumerate() {
        let values: Vec<f64> = per_seed
            .iter()
            .map(|(_, v)| {
                let m = &v[i];
                debug_assert_eq!((m.metric, m.direction, m.k), (proto.metric, proto.direction, proto.k));
                m.value
            })
            .collect();
        let r = aggregate_ci(proto.metric, &values)?;
        rows.push(SummaryRow {
            metric: proto.metric.to_string(),
            direction: proto.direction,
            k: proto.k,
            mean: r.mean,
            ci95: r.ci95_halfwidth,
        });
    }
    Ok(rows)
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for r in rows {
        out.push_str(&r.csv_fields());
        out.push('\n');
    }
    out
}
