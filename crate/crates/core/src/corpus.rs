//! Documents, corpora and the JSON exchange format.
//!
//! ```text
//! {"version": 1, "feature_dimension": d, "label_set": [6 names],
//!  "documents": [{"doc_id": .., "events": [{"id", "sentence"}],
//!                 "pairs": [{"e1", "e2", "features": [[i, v]..], "gold": name|null}]}]}
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Pair, TLink, TemporalGraph};
use crate::model::FeatureVector;
use crate::relation::Relation;

pub const CORPUS_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventNode {
    pub id: u32,
    pub sentence: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairRecord {
    pub pair: Pair,
    pub features: FeatureVector,
    pub gold: Option<Relation>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub doc_id: String,
    pub events: Vec<EventNode>,
    /// Sorted by canonical pair, unique.
    pub pairs: Vec<PairRecord>,
}

impl Document {
    /// Builds a document, sorting pairs and checking the event/pair invariants.
    pub fn new(doc_id: String, events: Vec<EventNode>, mut pairs: Vec<PairRecord>) -> Result<Document> {
        let schema = |message: String| Error::Schema {
            location: format!("document {doc_id:?}"),
            message,
        };
        for (i, e) in events.iter().enumerate() {
            if e.id as usize != i {
                return Err(schema(format!("event ids must be 0..n in order; found {} at position {i}", e.id)));
            }
        }
        if let Some(w) = events.windows(2).find(|w| w[1].sentence < w[0].sentence) {
            return Err(schema(format!(
                "sentence indices must be non-decreasing; event {} is in sentence {} after sentence {}",
                w[1].id, w[1].sentence, w[0].sentence
            )));
        }
        pairs.sort_by_key(|p| p.pair);
        if let Some(w) = pairs.windows(2).find(|w| w[0].pair == w[1].pair) {
            return Err(schema(format!("duplicate pair {:?}", w[0].pair)));
        }
        if let Some(p) = pairs.iter().find(|p| p.pair.second() as usize >= events.len()) {
            return Err(schema(format!(
                "pair {:?} references an event outside 0..{}",
                p.pair,
                events.len()
            )));
        }
        Ok(Document {
            doc_id,
            events,
            pairs,
        })
    }

    pub fn n_events(&self) -> usize {
        self.events.len()
    }

    pub fn sentence(&self, event: u32) -> u32 {
        self.events[event as usize].sentence
    }

    pub fn record(&self, pair: Pair) -> Option<&PairRecord> {
        self.pairs
            .binary_search_by_key(&pair, |p| p.pair)
            .ok()
            .map(|i| &self.pairs[i])
    }

    pub fn features(&self, pair: Pair) -> Option<&FeatureVector> {
        self.record(pair).map(|p| &p.features)
    }

    /// Annotated label of `pair`; unannotated pairs are vague.
    pub fn gold_label(&self, pair: Pair) -> Relation {
        self.record(pair)
            .and_then(|p| p.gold)
            .unwrap_or(Relation::Vague)
    }

    pub fn is_labeled(&self) -> bool {
        self.pairs.iter().any(|p| p.gold.is_some())
    }

    /// The annotated graph (vague and missing labels are absent edges).
    pub fn gold_graph(&self) -> Result<TemporalGraph> {
        TemporalGraph::from_links(
            self.n_events(),
            self.pairs.iter().filter_map(|p| {
                p.gold
                    .map(|r| TLink::new(p.pair.first(), p.pair.second(), r))
            }),
        )
        .map_err(|e| e.in_document(&self.doc_id))
    }

    pub fn closed_gold_graph(&self) -> Result<TemporalGraph> {
        self.gold_graph()?
            .closure()
            .map_err(|e| e.in_document(&self.doc_id))
    }

    /// Copy with every gold label removed.
    pub fn unlabeled(&self) -> Document {
        let mut d = self.clone();
        for p in &mut d.pairs {
            p.gold = None;
        }
        d
    }

    /// Copy whose labels are exactly `labels`: listed pairs not in `labels`
    /// get `None`, and pairs in `labels` that the document does not list are
    /// added with empty features.
    pub fn relabeled<I>(&self, labels: I) -> Document
    where
        I: IntoIterator<Item = (Pair, Relation)>,
    {
        let mut d = self.unlabeled();
        for (pair, rel) in labels {
            match d.pairs.binary_search_by_key(&pair, |p| p.pair) {
                Ok(i) => d.pairs[i].gold = Some(rel),
                Err(i) => d.pairs.insert(
                    i,
                    PairRecord {
                        pair,
                        features: FeatureVector::default(),
                        gold: Some(rel),
                    },
                ),
            }
        }
        d
    }

    /// Copy whose gold graph is consistent: pairs are added in canonical
    /// order and any label conflicting with earlier ones is removed.
    pub fn repaired_gold(&self) -> Result<(Document, Vec<TLink>)> {
        let links = self.pairs.iter().filter_map(|p| {
            p.gold
                .filter(|r| !r.is_vague())
                .map(|r| TLink::new(p.pair.first(), p.pair.second(), r))
        });
        let (_, dropped) = TemporalGraph::repaired(self.n_events(), links)
            .map_err(|e| e.in_document(&self.doc_id))?;
        let mut d = self.clone();
        for link in &dropped {
            let pair = Pair::new(link.source, link.target).expect("stored pairs are distinct");
            if let Ok(i) = d.pairs.binary_search_by_key(&pair, |p| p.pair) {
                d.pairs[i].gold = None;
            }
        }
        Ok((d, dropped))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub feature_dimension: usize,
    pub documents: Vec<Document>,
}

impl Corpus {
    pub fn new(feature_dimension: usize, documents: Vec<Document>) -> Result<Corpus> {
        for doc in &documents {
            for p in &doc.pairs {
                p.features
                    .check_dimension(feature_dimension)
                    .map_err(|e| Error::Schema {
                        location: format!("document {:?}, pair {:?}", doc.doc_id, p.pair),
                        message: e.to_string(),
                    })?;
            }
        }
        Ok(Corpus {
            feature_dimension,
            documents,
        })
    }

    pub fn document(&self, doc_id: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.doc_id == doc_id)
    }

    /// Documents whose gold annotation does not survive closure.
    pub fn inconsistent_documents(&self) -> Vec<(String, Error)> {
        self.documents
            .iter()
            .filter_map(|d| d.closed_gold_graph().err().map(|e| (d.doc_id.clone(), e)))
            .collect()
    }

    pub fn to_json(&self) -> String {
        let raw = RawCorpus {
            version: CORPUS_VERSION,
            feature_dimension: self.feature_dimension,
            label_set: Relation::ALL.iter().map(|r| r.name().to_string()).collect(),
            documents: self.documents.iter().map(RawDocument::from).collect(),
        };
        let mut s = serde_json::to_string_pretty(&raw).expect("corpus serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, origin: &Path) -> Result<Corpus> {
        let raw: RawCorpus = serde_json::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        if raw.version != CORPUS_VERSION {
            return Err(Error::Schema {
                location: origin.display().to_string(),
                message: format!("unsupported corpus version {}", raw.version),
            });
        }
        let expected: Vec<&str> = Relation::ALL.iter().map(|r| r.name()).collect();
        if raw.label_set != expected {
            return Err(Error::Schema {
                location: format!("{}: label_set", origin.display()),
                message: format!("expected {expected:?}, found {:?}", raw.label_set),
            });
        }
        let documents = raw
            .documents
            .into_iter()
            .map(RawDocument::into_document)
            .collect::<Result<Vec<_>>>()?;
        Corpus::new(raw.feature_dimension, documents)
    }
}

pub fn load_corpus(path: &Path) -> Result<Corpus> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Corpus::from_json(&text, path)
}

pub fn save_corpus(corpus: &Corpus, path: &Path) -> Result<()> {
    std::fs::write(path, corpus.to_json()).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCorpus {
    version: u32,
    feature_dimension: usize,
    label_set: Vec<String>,
    documents: Vec<RawDocument>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    doc_id: String,
    events: Vec<EventNode>,
    pairs: Vec<RawPair>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPair {
    e1: u32,
    e2: u32,
    features: Vec<(u32, f64)>,
    gold: Option<Relation>,
}

impl From<&Document> for RawDocument {
    fn from(d: &Document) -> RawDocument {
        RawDocument {
            doc_id: d.doc_id.clone(),
            events: d.events.clone(),
            pairs: d
                .pairs
                .iter()
                .map(|p| RawPair {
                    e1: p.pair.first(),
                    e2: p.pair.second(),
                    features: p.features.entries().to_vec(),
                    gold: p.gold,
                })
                .collect(),
        }
    }
}

impl RawDocument {
    fn into_document(self) -> Result<Document> {
        let doc_id = self.doc_id;
        let pairs = self
            .pairs
            .into_iter()
            .map(|p| {
                let location = || format!("document {doc_id:?}, pair ({}, {})", p.e1, p.e2);
                if p.e1 >= p.e2 {
                    return Err(Error::Schema {
                        location: location(),
                        message: "pairs must be canonical (e1 < e2)".into(),
                    });
                }
                let features = FeatureVector::new(p.features).map_err(|e| Error::Schema {
                    location: location(),
                    message: e.to_string(),
                })?;
                Ok(PairRecord {
                    pair: Pair::new(p.e1, p.e2).expect("e1 < e2"),
                    features,
                    gold: p.gold,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Document::new(doc_id, self.events, pairs)
    }
}
