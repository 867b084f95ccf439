//! Method comparison on generated corpora.
//!
//! Every cell (method × seed) generates its corpus from the seed, holds out
//! the tail of the training split as a development set, trains on the rest
//! and reports awareness on the test split. Cells are independent and run in
//! parallel; each is deterministic.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::eval::{aggregate, awareness_counts, AwarenessCounts, AwarenessScore, Averaging};
use crate::inference::{
    close_assignment, post_filter, prefilter, repair_order, solve_local, solve_map,
    Assignment, Decoder, InferenceConfig,
};
use crate::model::{Model, ScoreTable};
use crate::synth::{generate_synthetic, SynthConfig};
use crate::training::{train_codl, train_local_ap, train_structured, TrainConfig, TrainLog};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Local learning, per-pair decoding.
    Local,
    /// Local learning, constrained decoding.
    LocalInference,
    /// Structured perceptron, constrained decoding.
    StructuredInference,
    /// Structured perceptron with vague as a sixth label; no post-filter.
    StructuredVagueLabel,
    /// Local learning on the labelled subset only, constrained decoding.
    SupervisedSubset,
    /// Constraint-driven learning on the labelled subset plus the rest.
    Codl,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Local,
        Method::LocalInference,
        Method::StructuredInference,
        Method::StructuredVagueLabel,
        Method::SupervisedSubset,
        Method::Codl,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Method::Local => "L",
            Method::LocalInference => "L+I",
            Method::StructuredInference => "S+I",
            Method::StructuredVagueLabel => "S+I (vague label)",
            Method::SupervisedSubset => "L+I (labeled subset)",
            Method::Codl => "CoDL+I",
        }
    }

    fn decoder(self) -> Decoder {
        match self {
            Method::Local => Decoder::Local,
            _ => Decoder::Global,
        }
    }

    fn vague_exclusion(self, default: bool) -> bool {
        match self {
            Method::StructuredVagueLabel => false,
            _ => default,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "tau")]
pub enum PostFilterMode {
    Off,
    Fixed(f64),
    /// Grid search on the development split.
    Tuned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub synth: SynthConfig,
    pub n_train: usize,
    pub n_test: usize,
    pub seeds: Vec<u64>,
    pub methods: Vec<Method>,
    pub dev_fraction: f64,
    /// Fraction of the fitting split that keeps its labels for CoDL.
    pub labeled_fraction: f64,
    pub post_filter: PostFilterMode,
    pub tau_grid: Vec<f64>,
    pub train: TrainConfig,
    pub inference: InferenceConfig,
    pub averaging: Averaging,
}

/// `{0, 0.05, …, 1.0}`
pub fn default_tau_grid() -> Vec<f64> {
    (0..=20).map(|k| k as f64 * 0.05).collect()
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            synth: SynthConfig::default(),
            n_train: 50,
            n_test: 20,
            seeds: (0..5).collect(),
            methods: Method::ALL.to_vec(),
            dev_fraction: 0.1,
            labeled_fraction: 0.2,
            post_filter: PostFilterMode::Tuned,
            tau_grid: default_tau_grid(),
            train: TrainConfig::default(),
            inference: InferenceConfig::default(),
            averaging: Averaging::Micro,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub method: Method,
    pub seed: u64,
    pub score: AwarenessScore,
    /// Threshold applied at test time, if any.
    pub tau: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub mean_precision: f64,
    pub mean_recall: f64,
    pub mean_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub cells: Vec<CellResult>,
    pub summary: Vec<MethodSummary>,
}

impl ExperimentReport {
    pub fn mean_f1(&self, method: Method) -> Option<f64> {
        self.summary
            .iter()
            .find(|s| s.method == method)
            .map(|s| s.mean_f1)
    }

    /// Aligned text table of the per-method means, F1 in percent.
    pub fn to_table(&self) -> String {
        let width = self
            .summary
            .iter()
            .map(|s| s.method.label().len())
            .max()
            .unwrap_or(6)
            .max(6);
        let mut out = format!("{:<width$}  {:>7}  {:>7}  {:>7}\n", "method", "P", "R", "F1");
        for s in &self.summary {
            out.push_str(&format!(
                "{:<width$}  {:>7.2}  {:>7.2}  {:>7.2}\n",
                s.method.label(),
                100.0 * s.mean_precision,
                100.0 * s.mean_recall,
                100.0 * s.mean_f1
            ));
        }
        out
    }
}

/// Labels and scores of a decoded document before post-filtering.
pub struct Decoded {
    pub scores: ScoreTable,
    pub assignment: Assignment,
    pub decoder: Decoder,
}

pub fn decode(model: &Model, doc: &Document, inf: &InferenceConfig, decoder: Decoder) -> Result<Decoded> {
    let pairs = prefilter(doc, inf);
    let scores = model.score_pairs(doc, pairs.pairs())?;
    let assignment = match decoder {
        Decoder::Local => solve_local(&scores),
        Decoder::Global => solve_map(&scores, &pairs, inf).map_err(|e| e.in_document(&doc.doc_id))?,
    };
    Ok(Decoded {
        scores,
        assignment,
        decoder,
    })
}

/// Awareness counts of decoded documents against their gold graphs.
pub fn score_decoded(
    docs: &[Document],
    decoded: &[Decoded],
    inf: &InferenceConfig,
    tau: Option<f64>,
    averaging: Averaging,
) -> Result<AwarenessScore> {
    let counts = docs
        .iter()
        .zip(decoded)
        .map(|(doc, d)| -> Result<AwarenessCounts> {
            let a = match tau {
                Some(t) => {
                    let cfg = InferenceConfig {
                        post_filter_tau: t,
                        ..inf.clone()
                    };
                    post_filter(&d.scores, &d.assignment, &cfg)
                }
                None => d.assignment.clone(),
            };
            let order = repair_order(d.decoder, &d.scores, &a);
            let (sys, _) = close_assignment(&a, doc.n_events(), &order)?;
            awareness_counts(&sys, &doc.gold_graph()?).map_err(|e| e.in_document(&doc.doc_id))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(&counts, averaging))
}

/// Smallest grid value with the best development F1.
pub fn tune_tau(
    docs: &[Document],
    decoded: &[Decoded],
    inf: &InferenceConfig,
    grid: &[f64],
    averaging: Averaging,
) -> Result<f64> {
    let mut best: Option<(f64, f64)> = None;
    for &tau in grid {
        let f1 = score_decoded(docs, decoded, inf, Some(tau), averaging)?.f1;
        if best.is_none_or(|(_, b)| f1 > b) {
            best = Some((tau, f1));
        }
    }
    best.map(|(t, _)| t)
        .ok_or_else(|| Error::Config("empty threshold grid".into()))
}

pub struct Splits {
    pub fit: Vec<Document>,
    pub dev: Vec<Document>,
    pub test: Vec<Document>,
    pub feature_dimension: usize,
}

pub fn make_splits(cfg: &ExperimentConfig, seed: u64) -> Result<Splits> {
    if cfg.n_train < 2 || cfg.n_test == 0 {
        return Err(Error::Config("need at least 2 training and 1 test document".into()));
    }
    let synth = SynthConfig {
        n_docs: cfg.n_train + cfg.n_test,
        seed,
        ..cfg.synth.clone()
    };
    let corpus = generate_synthetic(&synth)?;
    let mut docs = corpus.documents;
    let test = docs.split_off(cfg.n_train);
    let n_dev = ((cfg.dev_fraction * cfg.n_train as f64).ceil() as usize).clamp(1, cfg.n_train - 1);
    let dev = docs.split_off(cfg.n_train - n_dev);
    Ok(Splits {
        fit: docs,
        dev,
        test,
        feature_dimension: corpus.feature_dimension,
    })
}

pub fn train_method(method: Method, splits: &Splits, cfg: &ExperimentConfig, seed: u64) -> Result<Model> {
    let train = TrainConfig {
        shuffle_seed: cfg.train.shuffle_seed ^ seed,
        vague_exclusion: method.vague_exclusion(cfg.train.vague_exclusion),
        ..cfg.train.clone()
    };
    let inf = InferenceConfig {
        vague_exclusion: train.vague_exclusion,
        ..cfg.inference.clone()
    };
    let d = splits.feature_dimension;
    let log = &mut TrainLog::default();
    let n_labeled = ((cfg.labeled_fraction * splits.fit.len() as f64).round() as usize).clamp(1, splits.fit.len());
    match method {
        Method::Local | Method::LocalInference => train_local_ap(&splits.fit, d, &train, &inf, log),
        Method::StructuredInference | Method::StructuredVagueLabel => {
            train_structured(&splits.fit, d, &train, &inf, log)
        }
        Method::SupervisedSubset => train_local_ap(&splits.fit[..n_labeled], d, &train, &inf, log),
        Method::Codl => {
            let unlabeled: Vec<Document> = splits.fit[n_labeled..].iter().map(Document::unlabeled).collect();
            train_codl(&splits.fit[..n_labeled], &unlabeled, d, &train, &inf, log)
        }
    }
}

pub fn run_cell(method: Method, cfg: &ExperimentConfig, seed: u64) -> Result<CellResult> {
    let splits = make_splits(cfg, seed)?;
    let model = train_method(method, &splits, cfg, seed)?;
    let inf = InferenceConfig {
        vague_exclusion: method.vague_exclusion(cfg.train.vague_exclusion),
        ..cfg.inference.clone()
    };
    let decode_all = |docs: &[Document]| {
        docs.iter()
            .map(|d| decode(&model, d, &inf, method.decoder()))
            .collect::<Result<Vec<_>>>()
    };
    let tau = if method == Method::StructuredVagueLabel {
        None
    } else {
        match cfg.post_filter {
            PostFilterMode::Off => None,
            PostFilterMode::Fixed(t) => Some(t),
            PostFilterMode::Tuned => {
                let dev = decode_all(&splits.dev)?;
                Some(tune_tau(&splits.dev, &dev, &inf, &cfg.tau_grid, cfg.averaging)?)
            }
        }
    };
    let test = decode_all(&splits.test)?;
    let score = score_decoded(&splits.test, &test, &inf, tau, cfg.averaging)?;
    log::info!("{} seed {seed}: {score} (tau {tau:?})", method.label());
    Ok(CellResult {
        method,
        seed,
        score,
        tau,
    })
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.train.validate()?;
    cfg.inference.validate()?;
    cfg.synth.validate()?;
    if cfg.seeds.is_empty() || cfg.methods.is_empty() {
        return Err(Error::Config("experiment needs seeds and methods".into()));
    }
    let grid: Vec<(Method, u64)> = cfg
        .methods
        .iter()
        .flat_map(|&m| cfg.seeds.iter().map(move |&s| (m, s)))
        .collect();
    let cells = grid
        .par_iter()
        .map(|&(m, s)| run_cell(m, cfg, s))
        .collect::<Result<Vec<_>>>()?;
    let n = cfg.seeds.len() as f64;
    let summary = cfg
        .methods
        .iter()
        .map(|&method| {
            let mine = cells.iter().filter(|c| c.method == method);
            let (p, r, f) = mine.fold((0.0, 0.0, 0.0), |(p, r, f), c| {
                (p + c.score.precision, r + c.score.recall, f + c.score.f1)
            });
            MethodSummary {
                method,
                mean_precision: p / n,
                mean_recall: r / n,
                mean_f1: f / n,
            }
        })
        .collect();
    Ok(ExperimentReport { cells, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_has_21_points() {
        let g = default_tau_grid();
        assert_eq!(g.len(), 21);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[20], 1.0);
    }

    #[test]
    fn small_run_is_deterministic() {
        let cfg = ExperimentConfig {
            n_train: 6,
            n_test: 3,
            seeds: vec![1],
            methods: vec![Method::Local, Method::LocalInference],
            train: TrainConfig {
                epochs: 3,
                ..TrainConfig::default()
            },
            ..ExperimentConfig::default()
        };
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.summary.len(), 2);
        assert!(a.to_table().starts_with("method"));
    }

    #[test]
    fn splits_partition() {
        let cfg = ExperimentConfig {
            n_train: 10,
            n_test: 4,
            ..ExperimentConfig::default()
        };
        let s = make_splits(&cfg, 0).unwrap();
        assert_eq!((s.fit.len(), s.dev.len(), s.test.len()), (9, 1, 4));
    }
}
