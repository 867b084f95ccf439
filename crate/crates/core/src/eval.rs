//! Temporal-awareness precision, recall and F1.
//!
//! Precision checks the reduced system graph against the closed gold graph;
//! recall checks the reduced gold graph against the closed system graph. A
//! graph and its closure therefore score the same.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graph::TemporalGraph;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AwarenessScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl AwarenessScore {
    pub fn new(precision: f64, recall: f64) -> AwarenessScore {
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        AwarenessScore {
            precision,
            recall,
            f1,
        }
    }
}

impl std::fmt::Display for AwarenessScore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "P={:.4}, R={:.4}, F1={:.4}",
            self.precision, self.recall, self.f1
        )
    }
}

/// Raw numerators and denominators, so documents can be pooled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AwarenessCounts {
    /// `|sys⁻ ∩ gold⁺|`
    pub precision_hits: usize,
    /// `|sys⁻|`
    pub sys_reduced: usize,
    /// `|gold⁻ ∩ sys⁺|`
    pub recall_hits: usize,
    /// `|gold⁻|`
    pub gold_reduced: usize,
}

impl AwarenessCounts {
    pub fn score(&self) -> AwarenessScore {
        AwarenessScore::new(
            ratio(self.precision_hits, self.sys_reduced),
            ratio(self.recall_hits, self.gold_reduced),
        )
    }
}

impl std::ops::AddAssign for AwarenessCounts {
    fn add_assign(&mut self, rhs: AwarenessCounts) {
        self.precision_hits += rhs.precision_hits;
        self.sys_reduced += rhs.sys_reduced;
        self.recall_hits += rhs.recall_hits;
        self.gold_reduced += rhs.gold_reduced;
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn awareness_counts(sys: &TemporalGraph, gold: &TemporalGraph) -> Result<AwarenessCounts> {
    let sys_closed = sys.closure()?;
    let gold_closed = gold.closure()?;
    let sys_reduced = sys.reduce()?;
    let gold_reduced = gold.reduce()?;
    Ok(AwarenessCounts {
        precision_hits: sys_reduced.intersection_len(&gold_closed),
        sys_reduced: sys_reduced.len(),
        recall_hits: gold_reduced.intersection_len(&sys_closed),
        gold_reduced: gold_reduced.len(),
    })
}

pub fn temporal_awareness(sys: &TemporalGraph, gold: &TemporalGraph) -> Result<AwarenessScore> {
    Ok(awareness_counts(sys, gold)?.score())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    /// Pool numerators and denominators across documents.
    #[default]
    Micro,
    /// Average per-document precision and recall.
    Macro,
}

/// Corpus-level awareness over `(sys, gold)` document pairs.
pub fn corpus_awareness<'a, I>(docs: I, averaging: Averaging) -> Result<AwarenessScore>
where
    I: IntoIterator<Item = (&'a TemporalGraph, &'a TemporalGraph)>,
{
    let counts = docs
        .into_iter()
        .map(|(s, g)| awareness_counts(s, g))
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(&counts, averaging))
}

pub fn aggregate(counts: &[AwarenessCounts], averaging: Averaging) -> AwarenessScore {
    match averaging {
        Averaging::Micro => {
            let mut total = AwarenessCounts::default();
            for c in counts {
                total += *c;
            }
            total.score()
        }
        Averaging::Macro => {
            if counts.is_empty() {
                return AwarenessScore::new(0.0, 0.0);
            }
            let n = counts.len() as f64;
            let (p, r) = counts.iter().fold((0.0, 0.0), |(p, r), c| {
                let s = c.score();
                (p + s.precision, r + s.recall)
            });
            AwarenessScore::new(p / n, r / n)
        }
    }
}

/// Plain per-pair accuracy over `pairs`, vague included. Debug statistic only.
pub fn pairwise_accuracy(
    sys: &TemporalGraph,
    gold: &TemporalGraph,
    pairs: &[crate::graph::Pair],
) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    let hits = pairs.iter().filter(|&&p| sys.get(p) == gold.get(p)).count();
    hits as f64 / pairs.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::TLink;
    use crate::relation::Relation::{self, *};

    fn graph(n: usize, links: &[(u32, u32, Relation)]) -> TemporalGraph {
        TemporalGraph::from_links(n, links.iter().map(|&(s, t, r)| TLink::new(s, t, r))).unwrap()
    }

    fn fig2() -> TemporalGraph {
        graph(5, &[(1, 2, Before), (1, 0, IsIncluded), (0, 3, Before)])
    }

    #[test]
    fn identical_graphs_score_one() {
        let g = fig2();
        let s = temporal_awareness(&g, &g).unwrap();
        assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn closed_system_scores_same() {
        let sys1 = graph(5, &[(1, 2, Before), (2, 4, Before)]);
        let sys2 = sys1.closure().unwrap();
        assert_eq!(sys2.len(), 3);
        let gold = fig2();
        assert_eq!(
            temporal_awareness(&sys1, &gold).unwrap(),
            temporal_awareness(&sys2, &gold).unwrap()
        );
    }

    #[test]
    fn single_correct_edge_against_fig2() {
        let sys = graph(5, &[(1, 2, Before)]);
        let gold = fig2();
        let reduced_gold = gold.reduce().unwrap().len();
        assert_eq!(reduced_gold, 3);
        let s = temporal_awareness(&sys, &gold).unwrap();
        assert_eq!(s.precision, 1.0);
        assert_eq!(s.recall, 1.0 / 3.0);
    }

    #[test]
    fn empty_system_scores_zero() {
        let s = temporal_awareness(&TemporalGraph::new(5), &fig2()).unwrap();
        assert_eq!((s.precision, s.recall, s.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn display_format() {
        let s = AwarenessScore::new(1.0, 0.5);
        assert_eq!(s.to_string(), "P=1.0000, R=0.5000, F1=0.6667");
    }

    #[test]
    fn micro_and_macro_differ() {
        let a = AwarenessCounts {
            precision_hits: 1,
            sys_reduced: 1,
            recall_hits: 1,
            gold_reduced: 1,
        };
        let b = AwarenessCounts {
            precision_hits: 0,
            sys_reduced: 3,
            recall_hits: 0,
            gold_reduced: 3,
        };
        let micro = aggregate(&[a, b], Averaging::Micro);
        let macro_ = aggregate(&[a, b], Averaging::Macro);
        assert_eq!(micro.precision, 0.25);
        assert_eq!(macro_.precision, 0.5);
    }
}
