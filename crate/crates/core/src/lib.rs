//! Temporal relation extraction as structured learning.
//!
//! Events are related by one of six labels (before, after, includes,
//! is_included, equal, vague). A document's relations form a temporal graph
//! that must be transitively consistent; [`graph`] provides closure and
//! reduction under the interval composition table of [`relation`], and
//! [`eval`] scores graphs with the closure-aware temporal-awareness metric.
//!
//! Pair scores come from one-vs-all soft-max models ([`model`]). The
//! [`inference`] module finds the best consistent labelling exactly, and
//! [`training`] learns weights locally, with inference in the loop, or
//! semi-supervised. [`synth`] and [`experiment`] build desk-scale corpora
//! and compare the methods.

pub mod corpus;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod graph;
pub mod inference;
pub mod model;
pub mod relation;
pub mod synth;
pub mod training;

pub use corpus::{load_corpus, save_corpus, Corpus, Document, EventNode, PairRecord};
pub use error::{Error, Inconsistency, Result};
pub use eval::{corpus_awareness, temporal_awareness, AwarenessCounts, AwarenessScore, Averaging};
pub use graph::{annotation_census, AnnotationCensus, Pair, TLink, TemporalGraph};
pub use inference::{
    post_filter, predict, prefilter, relative_entropy_to_uniform, solve_map, solve_map_with_stats,
    Assignment, CandidatePairSet, Decoder, InferenceConfig, PostFilterLabels, Prediction, SolveStats,
};
pub use model::{FeatureVector, LabelProbs, Model, ScoreTable};
pub use relation::{compose, relation_of_intervals, reverse, Interval, Relation, RelationSet};
pub use synth::{generate_synthetic, SynthConfig};
pub use training::{train_codl, train_local_ap, train_structured, TrainConfig, TrainLog};
