//! Learners: the local averaged perceptron, the structured perceptron with
//! inference in the loop, and constraint-driven semi-supervised learning.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::graph::Pair;
use crate::inference::{
    close_assignment, prefilter, solve_map, Assignment, CandidatePairSet, InferenceConfig,
};
use crate::model::{FeatureVector, Model};
use crate::relation::{Relation, RelationSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub shuffle_seed: u64,
    pub codl_gamma: f64,
    pub codl_iterations: usize,
    pub vague_exclusion: bool,
    /// Local training stops early once the fraction of mistakes in an epoch
    /// is at most this value.
    pub convergence_tol: f64,
    /// Return averaged weights rather than the final iterate.
    pub average: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1.0,
            epochs: 20,
            shuffle_seed: 0,
            codl_gamma: 0.9,
            codl_iterations: 5,
            vague_exclusion: true,
            convergence_tol: 0.0,
            average: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.codl_gamma) {
            return Err(Error::Config("codl gamma must lie in [0, 1]".into()));
        }
        if self.convergence_tol.is_nan() || self.convergence_tol < 0.0 {
            return Err(Error::Config("convergence tolerance must be >= 0".into()));
        }
        Ok(())
    }

    pub fn active_labels(&self) -> RelationSet {
        Model::label_set(self.vague_exclusion)
    }
}

/// One line of a training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LogRecord {
    LocalEpoch {
        epoch: usize,
        examples: usize,
        mistakes: usize,
    },
    StructuredEpoch {
        epoch: usize,
        documents: usize,
        /// Documents whose prediction differed from gold.
        updates: usize,
        /// Pairs whose predicted label differed from gold.
        pair_errors: usize,
        /// Summed MAP objective of the predictions.
        objective: f64,
        /// Predictions whose closure failed and were used unclosed.
        unclosed: usize,
    },
    CodlIteration {
        iteration: usize,
        unlabeled: usize,
        /// Pseudo-labels that changed since the previous iteration.
        changed: usize,
        objective: f64,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub records: Vec<LogRecord>,
}

impl TrainLog {
    fn push(&mut self, r: LogRecord) {
        log::info!("{}", serde_json::to_string(&r).expect("log record serializes"));
        self.records.push(r);
    }

    /// Line-delimited JSON.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("log record serializes"));
            out.push('\n');
        }
        out
    }
}

/// Perceptron weights with a lazily maintained average.
///
/// With `Δ_t` the change made at step `t` (1-based) and `T` steps taken, the
/// mean of the post-step snapshots is `((T + 1) w − Σ t Δ_t) / T`.
pub struct AveragedPerceptron {
    current: Model,
    // Σ t Δ_t per relation
    stamped: Vec<Vec<f64>>,
    step: u64,
}

impl AveragedPerceptron {
    pub fn new(dimension: usize, active: RelationSet) -> AveragedPerceptron {
        let current = Model::zeros(dimension, active);
        let stamped = Relation::ALL
            .iter()
            .map(|&r| current.weights(r).to_vec())
            .collect();
        AveragedPerceptron {
            current,
            stamped,
            step: 0,
        }
    }

    pub fn current(&self) -> &Model {
        &self.current
    }

    /// Starts a new step; updates made before the next call belong to it.
    pub fn begin_step(&mut self) {
        self.step += 1;
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// `w_r += scale · φ`.
    pub fn add(&mut self, r: Relation, phi: &FeatureVector, scale: f64) {
        let t = self.step as f64;
        let w = self.current.weights_mut(r);
        let u = &mut self.stamped[r.as_index()];
        for &(i, v) in phi.entries() {
            w[i as usize] += scale * v;
            u[i as usize] += t * scale * v;
        }
    }

    pub fn averaged(&self) -> Model {
        if self.step == 0 {
            return self.current.clone();
        }
        let t = self.step as f64;
        let weights = Relation::ALL
            .iter()
            .map(|&r| {
                self.current
                    .weights(r)
                    .iter()
                    .zip(&self.stamped[r.as_index()])
                    .map(|(w, u)| ((t + 1.0) * w - u) / t)
                    .collect()
            })
            .collect();
        Model::from_weights(self.current.dimension(), self.current.active(), weights)
            .expect("shape preserved")
    }

    pub fn finish(self, average: bool) -> Model {
        if average {
            self.averaged()
        } else {
            self.current
        }
    }
}

/// A labelled pair for local learning.
#[derive(Debug, Clone, Copy)]
pub struct Example<'a> {
    pub features: &'a FeatureVector,
    pub label: Relation,
}

static EMPTY: FeatureVector = FeatureVector::EMPTY;

/// Candidate pairs of `doc` with labels from its closed gold graph; pairs
/// the closure does not reach are vague.
pub fn gold_targets(doc: &Document, inf: &InferenceConfig) -> Result<(CandidatePairSet, Vec<Relation>)> {
    let closed = doc
        .closed_gold_graph()
        .map_err(|e| e.in_document(&doc.doc_id))?;
    let pairs = prefilter(doc, inf);
    let labels = pairs
        .pairs()
        .iter()
        .map(|&p| closed.get(p).unwrap_or(Relation::Vague))
        .collect();
    Ok((pairs, labels))
}

fn features_of(doc: &Document, p: Pair) -> &FeatureVector {
    doc.features(p).unwrap_or(&EMPTY)
}

fn check_nonempty(docs: &[Document]) -> Result<()> {
    if docs.is_empty() {
        return Err(Error::Config("training set is empty".into()));
    }
    Ok(())
}

fn dimension_of(docs: &[&Document]) -> usize {
    // Corpus-level dimension is passed explicitly by callers that have one;
    // otherwise the largest index seen defines it.
    docs.iter()
        .flat_map(|d| d.pairs.iter())
        .filter_map(|r| r.features.max_index())
        .max()
        .map_or(0, |m| m as usize + 1)
}

/// One-vs-all averaged perceptron over independent pairs.
pub fn train_local_examples(
    examples: &[Example<'_>],
    dimension: usize,
    cfg: &TrainConfig,
    log: &mut TrainLog,
) -> Result<Model> {
    cfg.validate()?;
    let active = cfg.active_labels();
    let kept: Vec<&Example> = examples
        .iter()
        .filter(|e| active.contains(e.label))
        .collect();
    for e in &kept {
        e.features.check_dimension(dimension)?;
    }
    let mut ap = AveragedPerceptron::new(dimension, active);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.shuffle_seed);
    let mut order: Vec<usize> = (0..kept.len()).collect();
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut mistakes = 0;
        for &k in &order {
            let e = kept[k];
            ap.begin_step();
            let pred = ap.current().argmax(e.features)?;
            if pred != e.label {
                mistakes += 1;
                ap.add(e.label, e.features, cfg.learning_rate);
                ap.add(pred, e.features, -cfg.learning_rate);
            }
        }
        log.push(LogRecord::LocalEpoch {
            epoch,
            examples: kept.len(),
            mistakes,
        });
        if kept.is_empty() || mistakes as f64 <= cfg.convergence_tol * kept.len() as f64 {
            break;
        }
    }
    Ok(ap.finish(cfg.average))
}

/// Local averaged perceptron on the candidate pairs of `train`, labelled by
/// the closed gold graphs.
pub fn train_local_ap(
    train: &[Document],
    dimension: usize,
    cfg: &TrainConfig,
    inf: &InferenceConfig,
    log: &mut TrainLog,
) -> Result<Model> {
    check_nonempty(train)?;
    let targets = train
        .iter()
        .map(|d| gold_targets(d, inf))
        .collect::<Result<Vec<_>>>()?;
    let examples: Vec<Example> = train
        .iter()
        .zip(&targets)
        .flat_map(|(doc, (pairs, labels))| {
            pairs.pairs().iter().zip(labels).map(move |(&p, &label)| Example {
                features: features_of(doc, p),
                label,
            })
        })
        .collect();
    let dimension = dimension.max(dimension_of(&train.iter().collect::<Vec<_>>()));
    train_local_examples(&examples, dimension, cfg, log)
}

/// Structured perceptron with exact MAP inference in the loop.
pub fn train_structured(
    train: &[Document],
    dimension: usize,
    cfg: &TrainConfig,
    inf: &InferenceConfig,
    log: &mut TrainLog,
) -> Result<Model> {
    cfg.validate()?;
    inf.validate()?;
    check_nonempty(train)?;
    let dimension = dimension.max(dimension_of(&train.iter().collect::<Vec<_>>()));
    let active = cfg.active_labels();
    // Gold is closed once; it never changes.
    let targets = train
        .iter()
        .map(|d| gold_targets(d, inf))
        .collect::<Result<Vec<_>>>()?;
    for doc in train {
        for r in &doc.pairs {
            r.features.check_dimension(dimension).map_err(|e| e.in_document(&doc.doc_id))?;
        }
    }
    let mut ap = AveragedPerceptron::new(dimension, active);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.shuffle_seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut updates = 0;
        let mut pair_errors = 0;
        let mut objective = 0.0;
        let mut unclosed = 0;
        for &k in &order {
            let doc = &train[k];
            let (pairs, gold) = &targets[k];
            ap.begin_step();
            let scores = ap.current().score_pairs(doc, pairs.pairs())?;
            let raw = solve_map(&scores, pairs, inf).map_err(|e| e.in_document(&doc.doc_id))?;
            objective += raw.objective(&scores);
            let predicted = closed_labels(&raw, doc.n_events(), &mut unclosed);
            let mut changed = false;
            for (i, &p) in pairs.pairs().iter().enumerate() {
                let (y, y_hat) = (gold[i], predicted[i]);
                if y == y_hat || (cfg.vague_exclusion && y.is_vague()) {
                    continue;
                }
                changed = true;
                pair_errors += 1;
                let phi = features_of(doc, p);
                if active.contains(y) {
                    ap.add(y, phi, cfg.learning_rate);
                }
                if active.contains(y_hat) {
                    ap.add(y_hat, phi, -cfg.learning_rate);
                }
            }
            if changed {
                updates += 1;
            }
        }
        log.push(LogRecord::StructuredEpoch {
            epoch,
            documents: train.len(),
            updates,
            pair_errors,
            objective,
            unclosed,
        });
        if updates == 0 {
            break;
        }
    }
    Ok(ap.finish(cfg.average))
}

/// Labels of `a` after closure. When closure fails the unclosed labels are
/// kept and `unclosed` is incremented.
fn closed_labels(a: &Assignment, n_events: usize, unclosed: &mut usize) -> Vec<Relation> {
    match a.to_graph(n_events).and_then(|g| g.closure()) {
        Ok(closed) => a
            .pairs()
            .iter()
            .map(|&p| closed.get(p).unwrap_or(Relation::Vague))
            .collect(),
        Err(_) => {
            *unclosed += 1;
            a.labels().to_vec()
        }
    }
}

/// Pseudo-labels every document by constrained inference plus closure.
fn pseudo_label(model: &Model, docs: &[Document], inf: &InferenceConfig) -> Result<Vec<(Assignment, f64)>> {
    docs.par_iter()
        .map(|doc| {
            let pairs = prefilter(doc, inf);
            let scores = model.score_pairs(doc, pairs.pairs())?;
            let raw = solve_map(&scores, &pairs, inf).map_err(|e| e.in_document(&doc.doc_id))?;
            let objective = raw.objective(&scores);
            let priority: Vec<usize> = (0..raw.pairs().len()).collect();
            let (closed, _) = close_assignment(&raw, doc.n_events(), &priority)
                .map_err(|e| e.in_document(&doc.doc_id))?;
            let labels = raw
                .pairs()
                .iter()
                .map(|&p| closed.get(p).unwrap_or(Relation::Vague))
                .collect();
            Ok((Assignment::new(raw.pairs().to_vec(), labels)?, objective))
        })
        .collect()
}

/// Constraint-driven learning: local learning on `labeled`, then repeated
/// pseudo-labelling of `unlabeled` with convex re-estimation.
pub fn train_codl(
    labeled: &[Document],
    unlabeled: &[Document],
    dimension: usize,
    cfg: &TrainConfig,
    inf: &InferenceConfig,
    log: &mut TrainLog,
) -> Result<Model> {
    cfg.validate()?;
    inf.validate()?;
    check_nonempty(labeled)?;
    let all: Vec<&Document> = labeled.iter().chain(unlabeled).collect();
    let dimension = dimension.max(dimension_of(&all));
    let mut w = train_local_ap(labeled, dimension, cfg, inf, &mut TrainLog::default())?;
    if unlabeled.is_empty() {
        log::warn!("no unlabeled documents; returning the supervised model");
        return Ok(w);
    }
    let mut previous: Option<Vec<Assignment>> = None;
    for iteration in 1..=cfg.codl_iterations {
        let labelled = pseudo_label(&w, unlabeled, inf)?;
        let objective = labelled.iter().map(|(_, o)| o).sum();
        let current: Vec<Assignment> = labelled.into_iter().map(|(a, _)| a).collect();
        let changed = match &previous {
            None => current.iter().map(|a| a.pairs().len()).sum(),
            Some(prev) => prev
                .iter()
                .zip(&current)
                .map(|(p, c)| {
                    p.labels()
                        .iter()
                        .zip(c.labels())
                        .filter(|(x, y)| x != y)
                        .count()
                })
                .sum(),
        };
        log.push(LogRecord::CodlIteration {
            iteration,
            unlabeled: unlabeled.len(),
            changed,
            objective,
        });
        if previous.is_some() && changed == 0 {
            break;
        }
        let examples: Vec<Example> = unlabeled
            .iter()
            .zip(&current)
            .flat_map(|(doc, a)| {
                a.iter().map(move |(p, label)| Example {
                    features: features_of(doc, p),
                    label,
                })
            })
            .collect();
        let learned = train_local_examples(&examples, dimension, cfg, &mut TrainLog::default())?;
        w = w.interpolate(&learned, cfg.codl_gamma)?;
        previous = Some(current);
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{EventNode, PairRecord};
    use Relation::*;

    fn single(label: Relation, phi: &FeatureVector) -> Vec<Example<'_>> {
        vec![Example {
            features: phi,
            label,
        }]
    }

    #[test]
    fn one_update_trace() {
        let phi = FeatureVector::new(vec![(0, 1.0), (2, 0.5)]).unwrap();
        let cfg = TrainConfig {
            epochs: 1,
            average: false,
            ..TrainConfig::default()
        };
        let m = train_local_examples(&single(After, &phi), 3, &cfg, &mut TrainLog::default()).unwrap();
        assert_eq!(m.weights(After), &[1.0, 0.0, 0.5]);
        // zero weights tie, so the lowest ordinal is predicted
        assert_eq!(m.weights(Before), &[-1.0, 0.0, -0.5]);
        assert_eq!(m.weights(Equal), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn average_matches_snapshot_mean() {
        let a = FeatureVector::new(vec![(0, 1.0)]).unwrap();
        let b = FeatureVector::new(vec![(1, 2.0)]).unwrap();
        let mut ap = AveragedPerceptron::new(2, RelationSet::NON_VAGUE);
        // step 1: +a on before; step 2: nothing; step 3: -b on before, +a on after
        ap.begin_step();
        ap.add(Before, &a, 1.0);
        ap.begin_step();
        ap.begin_step();
        ap.add(Before, &b, -1.0);
        ap.add(After, &a, 1.0);
        // snapshots of before: [1,0], [1,0], [1,-2] → mean [1, -2/3]
        let avg = ap.averaged();
        assert_eq!(avg.weights(Before)[0], 1.0);
        assert!((avg.weights(Before)[1] + 2.0 / 3.0).abs() < 1e-15);
        assert!((avg.weights(After)[0] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn separable_two_label_set() {
        let feats: Vec<FeatureVector> = (0..20)
            .map(|k| FeatureVector::new(vec![(k % 2, 1.0), (2, 1.0)]).unwrap())
            .collect();
        let examples: Vec<Example> = feats
            .iter()
            .enumerate()
            .map(|(k, f)| Example {
                features: f,
                label: if k % 2 == 0 { Before } else { After },
            })
            .collect();
        let m = train_local_examples(&examples, 3, &TrainConfig::default(), &mut TrainLog::default()).unwrap();
        for e in &examples {
            assert_eq!(m.argmax(e.features).unwrap(), e.label);
        }
    }

    #[test]
    fn vague_examples_skipped_under_exclusion() {
        let phi = FeatureVector::new(vec![(0, 1.0)]).unwrap();
        let m = train_local_examples(&single(Vague, &phi), 1, &TrainConfig::default(), &mut TrainLog::default()).unwrap();
        assert_eq!(m, Model::zeros(1, RelationSet::NON_VAGUE));
    }

    #[test]
    fn config_validation() {
        let bad = TrainConfig {
            codl_gamma: 1.5,
            ..TrainConfig::default()
        };
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        let zero = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        assert!(zero.validate().is_err());
        assert!(matches!(
            train_local_ap(&[], 1, &TrainConfig::default(), &InferenceConfig::default(), &mut TrainLog::default()),
            Err(Error::Config(_))
        ));
    }

    fn toy_doc() -> Document {
        let events = (0..3).map(|id| EventNode { id, sentence: 0 }).collect();
        let rec = |a, b, f: u32, gold| PairRecord {
            pair: Pair::new(a, b).unwrap(),
            features: FeatureVector::new(vec![(f, 1.0)]).unwrap(),
            gold,
        };
        Document::new(
            "toy".into(),
            events,
            vec![rec(0, 1, 0, Some(Before)), rec(1, 2, 0, Some(Before)), rec(0, 2, 1, None)],
        )
        .unwrap()
    }

    #[test]
    fn structured_uses_closed_gold_and_converges() {
        let doc = toy_doc();
        let (_, gold) = gold_targets(&doc, &InferenceConfig::default()).unwrap();
        assert_eq!(gold, vec![Before, Before, Before]);
        let mut log = TrainLog::default();
        let m = train_structured(std::slice::from_ref(&doc), 2, &TrainConfig::default(), &InferenceConfig::default(), &mut log)
            .unwrap();
        match log.records.last().unwrap() {
            LogRecord::StructuredEpoch { updates, .. } => assert_eq!(*updates, 0),
            other => panic!("unexpected record {other:?}"),
        }
        let scores = m.score_pairs(&doc, &[Pair::new(0, 2).unwrap()]).unwrap();
        assert_eq!(scores.argmax(0), Before);
    }

    #[test]
    fn codl_gamma_one_keeps_initialization() {
        let doc = toy_doc();
        let cfg = TrainConfig {
            codl_gamma: 1.0,
            ..TrainConfig::default()
        };
        let inf = InferenceConfig::default();
        let base = train_local_ap(std::slice::from_ref(&doc), 2, &cfg, &inf, &mut TrainLog::default()).unwrap();
        let unl = vec![doc.unlabeled()];
        let m = train_codl(&[doc], &unl, 2, &cfg, &inf, &mut TrainLog::default()).unwrap();
        assert_eq!(m, base);
    }

    #[test]
    fn codl_without_unlabeled_is_supervised() {
        let doc = toy_doc();
        let cfg = TrainConfig::default();
        let inf = InferenceConfig::default();
        let base = train_local_ap(std::slice::from_ref(&doc), 2, &cfg, &inf, &mut TrainLog::default()).unwrap();
        let m = train_codl(&[doc], &[], 2, &cfg, &inf, &mut TrainLog::default()).unwrap();
        assert_eq!(m, base);
    }

    #[test]
    fn log_is_line_delimited() {
        let mut log = TrainLog::default();
        log.push(LogRecord::LocalEpoch {
            epoch: 1,
            examples: 2,
            mistakes: 1,
        });
        assert_eq!(
            log.to_jsonl(),
            "{\"kind\":\"local_epoch\",\"epoch\":1,\"examples\":2,\"mistakes\":1}\n"
        );
    }
}
