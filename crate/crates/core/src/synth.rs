//! Synthetic corpora with interval-grounded gold and noisy sparse features.
//!
//! Each document's events are laid out as a laminar interval family: any two
//! intervals are disjoint, nested or identical, so every gold pair is one of
//! the five non-vague relations and the gold graph is consistent by
//! construction. Event ids follow text order, which tracks start time up to a
//! small jitter.
//!
//! Feature layout, for `K = cue_block_size` and `P = noise_pool`:
//!
//! | range | meaning |
//! |---|---|
//! | `r·K .. (r+1)·K` | cues for non-vague relation `r` |
//! | `5K` | bias |
//! | `5K+1 .. 5K+4` | sentence distance 0, 1, ≥2 |
//! | `5K+4 .. 5K+4+P` | noise |
//!
//! A fraction of the nearby pairs are *dependent*: their cues are drawn from
//! random blocks, so their features say nothing about their label, which
//! instead follows by composition from two informative pairs in the same
//! window. Only inference over the triangle can recover them.

use std::collections::HashSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Document, EventNode, PairRecord};
use crate::error::{Error, Result};
use crate::graph::Pair;
use crate::model::FeatureVector;
use crate::relation::{compose, relation_of_intervals, Interval, Relation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_docs: usize,
    /// Inclusive range.
    pub events_per_doc: (usize, usize),
    /// Inclusive range; clipped to the event count.
    pub sentences_per_doc: (usize, usize),
    /// Probability that a cue is drawn from a wrong relation's block (ε).
    pub noise: f64,
    /// Probability that a gold label is replaced by vague (ρ).
    pub drop_rate: f64,
    pub seed: u64,
    /// Target fraction of in-window pairs whose cues are withheld.
    pub dependent_fraction: f64,
    /// Sentence window used when choosing dependent pairs and their supports.
    pub dependency_window: u32,
    pub cues_per_pair: usize,
    pub cue_block_size: usize,
    pub noise_features: usize,
    pub noise_pool: usize,
    /// Chance that a new event nests inside an existing one.
    pub nest_probability: f64,
    /// Chance that a new event shares an existing event's interval.
    pub equal_probability: f64,
    /// Maximum start-time jitter when ordering events into text.
    pub jitter: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_docs: 50,
            events_per_doc: (8, 12),
            sentences_per_doc: (3, 5),
            noise: 0.25,
            drop_rate: 0.0,
            seed: 0,
            dependent_fraction: 0.3,
            dependency_window: 1,
            cues_per_pair: 3,
            cue_block_size: 6,
            noise_features: 2,
            noise_pool: 32,
            nest_probability: 0.3,
            equal_probability: 0.05,
            jitter: 3.0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let rate = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")))
            }
        };
        rate("noise", self.noise)?;
        rate("drop rate", self.drop_rate)?;
        rate("dependent fraction", self.dependent_fraction)?;
        rate("nest probability", self.nest_probability)?;
        rate("equal probability", self.equal_probability)?;
        let range = |name: &str, (lo, hi): (usize, usize)| {
            if lo >= 1 && lo <= hi {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} range {lo}..={hi} is empty")))
            }
        };
        range("events per document", self.events_per_doc)?;
        range("sentences per document", self.sentences_per_doc)?;
        if self.cue_block_size == 0 || self.noise_pool == 0 {
            return Err(Error::Config("feature blocks must be non-empty".into()));
        }
        if self.jitter.is_nan() || self.jitter < 0.0 {
            return Err(Error::Config("jitter must be >= 0".into()));
        }
        Ok(())
    }

    pub fn feature_dimension(&self) -> usize {
        5 * self.cue_block_size + 4 + self.noise_pool
    }

    fn bias(&self) -> u32 {
        (5 * self.cue_block_size) as u32
    }

    fn distance_feature(&self, dist: u32) -> u32 {
        self.bias() + 1 + dist.min(2)
    }

    fn noise_base(&self) -> u32 {
        self.bias() + 4
    }
}

/// Random laminar family of `n` intervals, in generation order.
fn laminar_intervals(n: usize, cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Vec<Interval> {
    // Ordered forest: node k is a new root, a child of an earlier node, or an
    // alias of an earlier node.
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
    let mut alias: Vec<Option<usize>> = vec![None; n];
    const ROOT: usize = usize::MAX;
    for k in 0..n {
        if k > 0 && rng.random_bool(cfg.equal_probability) {
            alias[k] = Some(rng.random_range(0..k));
            continue;
        }
        let parent = if k > 0 && rng.random_bool(cfg.nest_probability) {
            let mut p = rng.random_range(0..k);
            while let Some(a) = alias[p] {
                p = a;
            }
            p
        } else {
            ROOT
        };
        let slot = if parent == ROOT { n } else { parent };
        let at = rng.random_range(0..=children[slot].len());
        children[slot].insert(at, k);
    }
    let mut start = vec![0i64; n];
    let mut end = vec![0i64; n];
    let mut clock = 0i64;
    // Iterative DFS: (node, entering)
    let mut stack: Vec<(usize, bool)> = children[n].iter().rev().map(|&c| (c, true)).collect();
    while let Some((v, entering)) = stack.pop() {
        if entering {
            start[v] = clock;
            clock += 1;
            stack.push((v, false));
            stack.extend(children[v].iter().rev().map(|&c| (c, true)));
        } else {
            end[v] = clock;
            clock += 1;
        }
    }
    (0..n)
        .map(|k| {
            let mut src = k;
            while let Some(a) = alias[src] {
                src = a;
            }
            Interval::new(start[src], end[src]).expect("dfs intervals are proper")
        })
        .collect()
}

/// Sentence index per text position: `s` non-empty contiguous groups.
fn sentence_split(n: usize, s: usize, rng: &mut ChaCha8Rng) -> Vec<u32> {
    let mut gaps: Vec<usize> = (1..n).collect();
    gaps.shuffle(rng);
    let mut cuts: Vec<usize> = gaps.into_iter().take(s - 1).collect();
    cuts.sort_unstable();
    let mut out = Vec::with_capacity(n);
    let mut sentence = 0u32;
    let mut next = cuts.iter().peekable();
    for pos in 0..n {
        if next.peek().is_some_and(|&&c| c == pos) {
            sentence += 1;
            next.next();
        }
        out.push(sentence);
    }
    out
}

fn oriented(labels: &[Vec<Relation>], a: usize, b: usize) -> Relation {
    if a < b {
        labels[a][b]
    } else {
        labels[b][a].reverse()
    }
}

/// Picks dependent pairs greedily; each one keeps two locked supports.
fn choose_dependent(
    labels: &[Vec<Relation>],
    sentences: &[u32],
    cfg: &SynthConfig,
    rng: &mut ChaCha8Rng,
) -> HashSet<(usize, usize)> {
    let n = labels.len();
    let near = |a: usize, b: usize| sentences[a].abs_diff(sentences[b]) <= cfg.dependency_window;
    let mut window: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .filter(|&(a, b)| near(a, b))
        .collect();
    let target = (cfg.dependent_fraction * window.len() as f64).round() as usize;
    window.shuffle(rng);
    let key = |a: usize, b: usize| (a.min(b), a.max(b));
    let mut dependent = HashSet::new();
    let mut locked = HashSet::new();
    for &(a, b) in &window {
        if dependent.len() >= target {
            break;
        }
        if locked.contains(&(a, b)) {
            continue;
        }
        let mut mids: Vec<usize> = (0..n).filter(|&m| m != a && m != b).collect();
        mids.shuffle(rng);
        let support = mids.into_iter().find(|&m| {
            let (s1, s2) = (key(a, m), key(m, b));
            near(a, m)
                && near(m, b)
                && !dependent.contains(&s1)
                && !dependent.contains(&s2)
                && compose(oriented(labels, a, m), oriented(labels, m, b)).as_singleton()
                    == Some(labels[a][b])
        });
        if let Some(m) = support {
            dependent.insert((a, b));
            locked.insert(key(a, m));
            locked.insert(key(m, b));
        }
    }
    dependent
}

fn generate_document(index: usize, cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Result<Document> {
    let n = rng.random_range(cfg.events_per_doc.0..=cfg.events_per_doc.1);
    let s_hi = cfg.sentences_per_doc.1.min(n);
    let s_lo = cfg.sentences_per_doc.0.min(s_hi);
    let s = rng.random_range(s_lo..=s_hi);

    let intervals = laminar_intervals(n, cfg, rng);
    // Text order: start time plus jitter, ties by generation order.
    let mut keyed: Vec<(f64, usize)> = intervals
        .iter()
        .enumerate()
        .map(|(k, iv)| (iv.start() as f64 + rng.random::<f64>() * cfg.jitter, k))
        .collect();
    keyed.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    let text: Vec<Interval> = keyed.iter().map(|&(_, k)| intervals[k]).collect();
    let sentences = sentence_split(n, s, rng);

    let mut labels = vec![vec![Relation::Vague; n]; n];
    for a in 0..n {
        for b in a + 1..n {
            labels[a][b] = relation_of_intervals(text[a], text[b]);
        }
    }
    let dependent = choose_dependent(&labels, &sentences, cfg, rng);

    let k = cfg.cue_block_size as u32;
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for a in 0..n {
        for b in a + 1..n {
            let gold = labels[a][b];
            let mut idx = vec![
                cfg.bias(),
                cfg.distance_feature(sentences[a].abs_diff(sentences[b])),
            ];
            let is_dependent = dependent.contains(&(a, b));
            for _ in 0..cfg.cues_per_pair {
                let block = if is_dependent {
                    rng.random_range(0..5)
                } else if rng.random_bool(cfg.noise) {
                    let others: Vec<usize> = (0..5).filter(|&r| r != gold.as_index()).collect();
                    *others.choose(rng).expect("four other blocks")
                } else {
                    gold.as_index()
                };
                idx.push(block as u32 * k + rng.random_range(0..k));
            }
            for _ in 0..cfg.noise_features {
                idx.push(cfg.noise_base() + rng.random_range(0..cfg.noise_pool as u32));
            }
            let label = if rng.random_bool(cfg.drop_rate) {
                Relation::Vague
            } else {
                gold
            };
            pairs.push(PairRecord {
                pair: Pair::new(a as u32, b as u32).expect("a < b"),
                features: FeatureVector::from_indicators(idx),
                gold: Some(label),
            });
        }
    }
    let events = sentences
        .iter()
        .enumerate()
        .map(|(id, &sentence)| EventNode {
            id: id as u32,
            sentence,
        })
        .collect();
    Document::new(format!("synth-{index:04}"), events, pairs)
}

pub fn generate_synthetic(cfg: &SynthConfig) -> Result<Corpus> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let docs = (0..cfg.n_docs)
        .map(|i| generate_document(i, cfg, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    Corpus::new(cfg.feature_dimension(), docs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gold_is_consistent_and_complete() {
        let cfg = SynthConfig {
            n_docs: 20,
            ..SynthConfig::default()
        };
        let c = generate_synthetic(&cfg).unwrap();
        assert_eq!(c.documents.len(), 20);
        for d in &c.documents {
            let n = d.n_events();
            assert!((8..=12).contains(&n));
            assert_eq!(d.pairs.len(), n * (n - 1) / 2);
            let g = d.gold_graph().unwrap();
            assert!(g.is_consistent(), "{}", d.doc_id);
            assert_eq!(g.len(), d.pairs.len());
        }
    }

    #[test]
    fn deterministic_bytes() {
        let cfg = SynthConfig {
            noise: 0.3,
            drop_rate: 0.5,
            seed: 7,
            n_docs: 5,
            ..SynthConfig::default()
        };
        let a = generate_synthetic(&cfg).unwrap().to_json();
        let b = generate_synthetic(&cfg).unwrap().to_json();
        assert_eq!(a, b);
        let other = generate_synthetic(&SynthConfig { seed: 8, ..cfg }).unwrap().to_json();
        assert_ne!(a, other);
    }

    #[test]
    fn full_drop_leaves_nothing_annotated() {
        let cfg = SynthConfig {
            drop_rate: 1.0,
            n_docs: 4,
            ..SynthConfig::default()
        };
        for d in generate_synthetic(&cfg).unwrap().documents {
            assert_eq!(d.gold_graph().unwrap().census().unwrap().annotated, 0);
        }
    }

    #[test]
    fn dropping_keeps_consistency() {
        let cfg = SynthConfig {
            drop_rate: 0.5,
            n_docs: 10,
            ..SynthConfig::default()
        };
        for d in generate_synthetic(&cfg).unwrap().documents {
            assert!(d.gold_graph().unwrap().is_consistent());
        }
    }

    #[test]
    fn noiseless_cues_match_gold_except_dependents() {
        let cfg = SynthConfig {
            n_docs: 10,
            noise: 0.0,
            ..SynthConfig::default()
        };
        let k = cfg.cue_block_size as u32;
        let c = generate_synthetic(&cfg).unwrap();
        let (mut clean, mut mixed) = (0, 0);
        for p in c.documents.iter().flat_map(|d| &d.pairs) {
            let gold = p.gold.unwrap().as_index() as u32;
            let cues: Vec<u32> = p
                .features
                .entries()
                .iter()
                .filter(|&&(i, _)| i < 5 * k)
                .map(|&(i, _)| i / k)
                .collect();
            assert!(!cues.is_empty());
            if cues.iter().all(|&b| b == gold) {
                clean += 1;
            } else {
                mixed += 1;
            }
        }
        assert!(clean > 0 && mixed > 0);
    }

    #[test]
    fn laminar_relations_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cfg = SynthConfig::default();
        for _ in 0..50 {
            let iv = laminar_intervals(10, &cfg, &mut rng);
            for a in &iv {
                for b in &iv {
                    assert_ne!(relation_of_intervals(*a, *b), Relation::Vague);
                }
            }
        }
    }

    #[test]
    fn sentences_are_contiguous() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = sentence_split(6, 3, &mut rng);
        assert_eq!(s.len(), 6);
        assert_eq!(s[0], 0);
        assert_eq!(*s.last().unwrap(), 2);
        assert!(s.windows(2).all(|w| w[1] == w[0] || w[1] == w[0] + 1));
    }

    #[test]
    fn rejects_bad_rates() {
        let cfg = SynthConfig {
            noise: 1.5,
            ..SynthConfig::default()
        };
        assert!(generate_synthetic(&cfg).is_err());
    }
}
