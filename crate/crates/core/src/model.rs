//! Sparse features, one-vs-all linear models and soft-max pair scores.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::graph::Pair;
use crate::relation::{Relation, RelationSet};

/// Sparse feature vector: sorted unique indices, no explicit zeros.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<(u32, f64)>", into = "Vec<(u32, f64)>")]
pub struct FeatureVector {
    entries: Vec<(u32, f64)>,
}

impl FeatureVector {
    pub const EMPTY: FeatureVector = FeatureVector {
        entries: Vec::new(),
    };

    pub fn new(mut entries: Vec<(u32, f64)>) -> Result<FeatureVector> {
        entries.retain(|&(_, v)| v != 0.0);
        entries.sort_by_key(|&(i, _)| i);
        if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::Schema {
                location: "features".into(),
                message: format!("duplicate feature index {}", w[0].0),
            });
        }
        if let Some(&(i, _)) = entries.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Schema {
                location: "features".into(),
                message: format!("non-finite value at feature index {i}"),
            });
        }
        Ok(FeatureVector { entries })
    }

    /// Indicator features with value 1.0; duplicates are merged by summing.
    pub fn from_indicators<I: IntoIterator<Item = u32>>(indices: I) -> FeatureVector {
        let mut counts: BTreeMap<u32, f64> = BTreeMap::new();
        for i in indices {
            *counts.entry(i).or_default() += 1.0;
        }
        FeatureVector {
            entries: counts.into_iter().collect(),
        }
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_index(&self) -> Option<u32> {
        self.entries.last().map(|&(i, _)| i)
    }

    pub fn check_dimension(&self, dimension: usize) -> Result<()> {
        match self.max_index() {
            Some(index) if index as usize >= dimension => Err(Error::Dimension { index, dimension }),
            _ => Ok(()),
        }
    }

    fn dot(&self, w: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| w[i as usize] * v).sum()
    }
}

impl TryFrom<Vec<(u32, f64)>> for FeatureVector {
    type Error = Error;

    fn try_from(entries: Vec<(u32, f64)>) -> Result<FeatureVector> {
        FeatureVector::new(entries)
    }
}

impl From<FeatureVector> for Vec<(u32, f64)> {
    fn from(f: FeatureVector) -> Self {
        f.entries
    }
}

/// Per-relation probabilities indexed by ordinal; inactive labels hold 0.
pub type LabelProbs = [f64; Relation::COUNT];

/// One weight vector per active relation, all of dimension `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    dimension: usize,
    active: RelationSet,
    // Indexed by ordinal; empty for inactive labels.
    weights: Vec<Vec<f64>>,
}

impl Model {
    pub fn zeros(dimension: usize, active: RelationSet) -> Model {
        let weights = Relation::ALL
            .iter()
            .map(|&r| {
                if active.contains(r) {
                    vec![0.0; dimension]
                } else {
                    Vec::new()
                }
            })
            .collect();
        Model {
            dimension,
            active,
            weights,
        }
    }

    /// Active label set for a vague-exclusion flag.
    pub fn label_set(vague_exclusion: bool) -> RelationSet {
        if vague_exclusion {
            RelationSet::NON_VAGUE
        } else {
            RelationSet::FULL
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn active(&self) -> RelationSet {
        self.active
    }

    /// Weight vector for `r`; empty when `r` is inactive.
    pub fn weights(&self, r: Relation) -> &[f64] {
        &self.weights[r.as_index()]
    }

    pub fn weights_mut(&mut self, r: Relation) -> &mut [f64] {
        &mut self.weights[r.as_index()]
    }

    pub fn logit(&self, r: Relation, phi: &FeatureVector) -> Result<f64> {
        phi.check_dimension(self.dimension)?;
        Ok(if self.active.contains(r) {
            phi.dot(self.weights(r))
        } else {
            0.0
        })
    }

    fn logits(&self, phi: &FeatureVector) -> Result<LabelProbs> {
        phi.check_dimension(self.dimension)?;
        let mut out = [f64::NEG_INFINITY; Relation::COUNT];
        for r in self.active.iter() {
            out[r.as_index()] = phi.dot(self.weights(r));
        }
        Ok(out)
    }

    /// Soft-max over the active labels, with max subtraction.
    pub fn softmax_scores(&self, phi: &FeatureVector) -> Result<LabelProbs> {
        Ok(softmax(&self.logits(phi)?, self.active))
    }

    /// Highest-scoring active label; ties go to the lower ordinal.
    pub fn argmax(&self, phi: &FeatureVector) -> Result<Relation> {
        let logits = self.logits(phi)?;
        Ok(argmax_over(&logits, self.active))
    }

    /// Scores every pair in `pairs`. Pairs the document does not list get an
    /// empty feature vector.
    pub fn score_pairs(&self, doc: &Document, pairs: &[Pair]) -> Result<ScoreTable> {
        let empty = FeatureVector::default();
        let rows = pairs
            .iter()
            .map(|&p| self.softmax_scores(doc.features(p).unwrap_or(&empty)))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| e.in_document(&doc.doc_id))?;
        Ok(ScoreTable {
            active: self.active,
            pairs: pairs.to_vec(),
            rows,
        })
    }

    /// `gamma * self + (1 - gamma) * other`, coordinate-wise.
    pub fn interpolate(&self, other: &Model, gamma: f64) -> Result<Model> {
        if self.dimension != other.dimension || self.active != other.active {
            return Err(Error::Config(
                "cannot interpolate models with different shapes".into(),
            ));
        }
        let weights = self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| {
                a.iter()
                    .zip(b)
                    .map(|(x, y)| gamma * x + (1.0 - gamma) * y)
                    .collect()
            })
            .collect();
        Ok(Model {
            dimension: self.dimension,
            active: self.active,
            weights,
        })
    }

    pub fn from_weights(
        dimension: usize,
        active: RelationSet,
        weights: Vec<Vec<f64>>,
    ) -> Result<Model> {
        if weights.len() != Relation::COUNT {
            return Err(Error::Config("expected one weight slot per relation".into()));
        }
        for r in Relation::ALL {
            let expected = if active.contains(r) { dimension } else { 0 };
            if weights[r.as_index()].len() != expected {
                return Err(Error::Config(format!(
                    "weight vector for {r} has length {}, expected {expected}",
                    weights[r.as_index()].len()
                )));
            }
        }
        Ok(Model {
            dimension,
            active,
            weights,
        })
    }
}

pub(crate) fn softmax(logits: &LabelProbs, active: RelationSet) -> LabelProbs {
    let max = active
        .iter()
        .map(|r| logits[r.as_index()])
        .fold(f64::NEG_INFINITY, f64::max);
    let mut out = [0.0; Relation::COUNT];
    let mut z = 0.0;
    for r in active.iter() {
        let e = (logits[r.as_index()] - max).exp();
        out[r.as_index()] = e;
        z += e;
    }
    for r in active.iter() {
        out[r.as_index()] /= z;
    }
    out
}

pub(crate) fn argmax_over(values: &LabelProbs, active: RelationSet) -> Relation {
    let mut best: Option<Relation> = None;
    for r in active.iter() {
        match best {
            Some(b) if values[r.as_index()] <= values[b.as_index()] => {}
            _ => best = Some(r),
        }
    }
    best.expect("active label set is non-empty")
}

/// Soft-max scores for a list of candidate pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    active: RelationSet,
    pairs: Vec<Pair>,
    rows: Vec<LabelProbs>,
}

impl ScoreTable {
    pub fn new(active: RelationSet, pairs: Vec<Pair>, rows: Vec<LabelProbs>) -> Result<ScoreTable> {
        if pairs.len() != rows.len() {
            return Err(Error::Config(format!(
                "{} pairs but {} score rows",
                pairs.len(),
                rows.len()
            )));
        }
        if active.is_empty() {
            return Err(Error::Config("empty active label set".into()));
        }
        Ok(ScoreTable {
            active,
            pairs,
            rows,
        })
    }

    pub fn active(&self) -> RelationSet {
        self.active
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn row(&self, i: usize) -> &LabelProbs {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, r: Relation) -> f64 {
        self.rows[i][r.as_index()]
    }

    pub fn index_of(&self, pair: Pair) -> Option<usize> {
        self.pairs.iter().position(|&p| p == pair)
    }

    pub fn argmax(&self, i: usize) -> Relation {
        argmax_over(&self.rows[i], self.active)
    }
}

/// `Σ f_{y_i}(φ_i)` over the pairs in `scope`.
pub fn document_score(
    model: &Model,
    doc: &Document,
    scope: &[Pair],
    labels: &BTreeMap<Pair, Relation>,
) -> Result<f64> {
    let empty = FeatureVector::default();
    let mut total = 0.0;
    for &pair in scope {
        let label = *labels.get(&pair).ok_or(Error::MissingAssignment(pair))?;
        let probs = model.softmax_scores(doc.features(pair).unwrap_or(&empty))?;
        total += probs[label.as_index()];
    }
    Ok(total)
}

const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    feature_dimension: usize,
    labels: Vec<Relation>,
    weights: Vec<WeightRecord>,
}

#[derive(Serialize, Deserialize)]
struct WeightRecord {
    relation: Relation,
    entries: Vec<(u32, f64)>,
}

impl Model {
    pub fn to_json(&self) -> String {
        let file = ModelFile {
            version: MODEL_VERSION,
            feature_dimension: self.dimension,
            labels: self.active.iter().collect(),
            weights: self
                .active
                .iter()
                .map(|r| WeightRecord {
                    relation: r,
                    entries: self
                        .weights(r)
                        .iter()
                        .enumerate()
                        .filter(|(_, &v)| v != 0.0)
                        .map(|(i, &v)| (i as u32, v))
                        .collect(),
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, origin: &Path) -> Result<Model> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let schema = |message: String| Error::Schema {
            location: origin.display().to_string(),
            message,
        };
        if file.version != MODEL_VERSION {
            return Err(schema(format!("unsupported model version {}", file.version)));
        }
        let active: RelationSet = file.labels.iter().copied().collect();
        if active.is_empty() {
            return Err(schema("model declares no labels".into()));
        }
        let mut model = Model::zeros(file.feature_dimension, active);
        for rec in file.weights {
            if !active.contains(rec.relation) {
                return Err(schema(format!("weights for undeclared label {}", rec.relation)));
            }
            let w = model.weights_mut(rec.relation);
            for (i, v) in rec.entries {
                let slot = w.get_mut(i as usize).ok_or_else(|| {
                    schema(format!(
                        "weight index {i} out of range for dimension {}",
                        file.feature_dimension
                    ))
                })?;
                *slot = v;
            }
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Model> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Model::from_json(&text, path)
    }
}
