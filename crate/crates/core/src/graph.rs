//! Event temporal graphs with closure, transitive reduction and consistency
//! checking.
//!
//! Edges are stored once per unordered pair in canonical orientation
//! (`first < second`); the reverse edge is implied. Vague labels are never
//! stored: an absent pair is vague.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Inconsistency, Result};
use crate::relation::{compose, Relation};

/// An unordered event pair in canonical orientation.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pair(u32, u32);

impl Pair {
    /// Canonical pair for `a` and `b`, or `None` when `a == b`.
    pub fn new(a: u32, b: u32) -> Option<Pair> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Some(Pair(a, b)),
            std::cmp::Ordering::Greater => Some(Pair(b, a)),
            std::cmp::Ordering::Equal => None,
        }
    }

    pub fn first(self) -> u32 {
        self.0
    }

    pub fn second(self) -> u32 {
        self.1
    }
}

impl fmt::Debug for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.0, self.1)
    }
}

/// A directed temporal link `source relation target`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TLink {
    pub source: u32,
    pub target: u32,
    pub relation: Relation,
}

impl TLink {
    pub fn new(source: u32, target: u32, relation: Relation) -> TLink {
        TLink {
            source,
            target,
            relation,
        }
    }

    /// The same link expressed on its canonical pair.
    pub fn canonical(self) -> Option<(Pair, Relation)> {
        let pair = Pair::new(self.source, self.target)?;
        let rel = if pair.first() == self.source {
            self.relation
        } else {
            self.relation.reverse()
        };
        Some((pair, rel))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TemporalGraph {
    n_events: usize,
    edges: BTreeMap<Pair, Relation>,
}

impl TemporalGraph {
    pub fn new(n_events: usize) -> TemporalGraph {
        TemporalGraph {
            n_events,
            edges: BTreeMap::new(),
        }
    }

    pub fn from_links<I>(n_events: usize, links: I) -> Result<TemporalGraph>
    where
        I: IntoIterator<Item = TLink>,
    {
        let mut g = TemporalGraph::new(n_events);
        for link in links {
            g.insert(link)?;
        }
        Ok(g)
    }

    /// Builds a graph from `(pair, relation)` entries already in canonical form.
    pub fn from_pairs<I>(n_events: usize, entries: I) -> Result<TemporalGraph>
    where
        I: IntoIterator<Item = (Pair, Relation)>,
    {
        TemporalGraph::from_links(
            n_events,
            entries
                .into_iter()
                .map(|(p, r)| TLink::new(p.first(), p.second(), r)),
        )
    }

    pub fn n_events(&self) -> usize {
        self.n_events
    }

    /// Adds a link. Vague links are accepted and ignored. Re-inserting an
    /// equivalent link (including its reverse) is a no-op; a different label
    /// on an existing pair is an error.
    pub fn insert(&mut self, link: TLink) -> Result<()> {
        for event in [link.source, link.target] {
            if event as usize >= self.n_events {
                return Err(Error::EventOutOfRange {
                    event,
                    n_events: self.n_events,
                });
            }
        }
        let (pair, rel) = link.canonical().ok_or(Error::SelfLoop(link.source))?;
        if rel.is_vague() {
            return Ok(());
        }
        match self.edges.get(&pair) {
            Some(&existing) if existing != rel => Err(Error::ConflictingDuplicate {
                pair,
                first: existing,
                second: rel,
            }),
            Some(_) => Ok(()),
            None => {
                self.edges.insert(pair, rel);
                Ok(())
            }
        }
    }

    pub fn remove(&mut self, pair: Pair) -> Option<Relation> {
        self.edges.remove(&pair)
    }

    /// Label of `a` relative to `b`, in that orientation.
    pub fn relation(&self, a: u32, b: u32) -> Option<Relation> {
        let pair = Pair::new(a, b)?;
        let rel = *self.edges.get(&pair)?;
        Some(if pair.first() == a { rel } else { rel.reverse() })
    }

    pub fn get(&self, pair: Pair) -> Option<Relation> {
        self.edges.get(&pair).copied()
    }

    /// Edges in ascending canonical pair order.
    pub fn edges(&self) -> impl Iterator<Item = (Pair, Relation)> + '_ {
        self.edges.iter().map(|(&p, &r)| (p, r))
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, pair: Pair, rel: Relation) -> bool {
        self.edges.get(&pair) == Some(&rel)
    }

    /// Number of edges shared with `other` (same pair and same label).
    pub fn intersection_len(&self, other: &TemporalGraph) -> usize {
        self.edges().filter(|&(p, r)| other.contains(p, r)).count()
    }

    /// Saturates the graph under symmetry and singleton compositions.
    ///
    /// Compositions with more than one possible outcome add nothing.
    pub fn closure(&self) -> Result<TemporalGraph> {
        let n = self.n_events;
        let mut m: Vec<Option<Relation>> = vec![None; n * n];
        let mut work: Vec<(u32, u32)> = Vec::with_capacity(self.edges.len());
        for (p, r) in self.edges() {
            let (i, j) = (p.first() as usize, p.second() as usize);
            m[i * n + j] = Some(r);
            m[j * n + i] = Some(r.reverse());
            work.push((p.first(), p.second()));
        }
        let mut out = self.clone();

        // Record a derived label for (a, c), failing on conflict.
        let derive = |m: &mut Vec<Option<Relation>>,
                          work: &mut Vec<(u32, u32)>,
                          out: &mut TemporalGraph,
                          a: usize,
                          via: usize,
                          c: usize,
                          rel: Relation|
         -> Result<()> {
            match m[a * n + c] {
                None => {
                    m[a * n + c] = Some(rel);
                    m[c * n + a] = Some(rel.reverse());
                    let link = TLink::new(a as u32, c as u32, rel);
                    let (pair, canon) = link.canonical().expect("distinct events");
                    out.edges.insert(pair, canon);
                    work.push((a as u32, c as u32));
                    Ok(())
                }
                Some(existing) if existing != rel => {
                    let (pair, existing) = TLink::new(a as u32, c as u32, existing)
                        .canonical()
                        .expect("distinct events");
                    let derived = if pair.first() as usize == a {
                        rel
                    } else {
                        rel.reverse()
                    };
                    Err(Error::InconsistentGraph(Inconsistency {
                        pair,
                        via: via as u32,
                        existing,
                        derived,
                    }))
                }
                Some(_) => Ok(()),
            }
        };

        while let Some((i, j)) = work.pop() {
            let (i, j) = (i as usize, j as usize);
            let r_ij = m[i * n + j].expect("queued edges are labelled");
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                if let Some(r_jk) = m[j * n + k] {
                    if let Some(r) = compose(r_ij, r_jk).as_singleton() {
                        derive(&mut m, &mut work, &mut out, i, j, k, r)?;
                    }
                }
                if let Some(r_ki) = m[k * n + i] {
                    if let Some(r) = compose(r_ki, r_ij).as_singleton() {
                        derive(&mut m, &mut work, &mut out, k, i, j, r)?;
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn is_consistent(&self) -> bool {
        self.closure().is_ok()
    }

    /// A deterministic irredundant edge set with the same closure.
    ///
    /// Starts from the closure and visits pairs in ascending order, dropping
    /// each edge that the remaining edges still derive.
    pub fn reduce(&self) -> Result<TemporalGraph> {
        let mut kept = self.closure()?;
        let pairs: Vec<(Pair, Relation)> = kept.edges().collect();
        for (pair, rel) in pairs {
            kept.edges.remove(&pair);
            if !kept.closure()?.contains(pair, rel) {
                kept.edges.insert(pair, rel);
            }
        }
        Ok(kept)
    }

    /// Edge counts by annotation category: annotated, added by closure, and
    /// still unknown.
    pub fn census(&self) -> Result<AnnotationCensus> {
        let closed = self.closure()?;
        let n = self.n_events;
        let total = n * n.saturating_sub(1) / 2;
        let annotated = self.len();
        let inferred = closed.len() - annotated;
        Ok(AnnotationCensus {
            annotated,
            inferred,
            unknown: total - annotated - inferred,
            total,
        })
    }

    /// Builds a consistent graph by inserting `links` in order and dropping
    /// each one that would conflict with what was already kept (directly or
    /// through closure). Returns the graph and the dropped links.
    pub fn repaired<I>(n_events: usize, links: I) -> Result<(TemporalGraph, Vec<TLink>)>
    where
        I: IntoIterator<Item = TLink>,
    {
        let mut g = TemporalGraph::new(n_events);
        let mut dropped = Vec::new();
        for link in links {
            let mut trial = g.clone();
            match trial.insert(link) {
                Ok(()) => {}
                Err(Error::ConflictingDuplicate { .. }) => {
                    dropped.push(link);
                    continue;
                }
                Err(e) => return Err(e),
            }
            if trial.is_consistent() {
                g = trial;
            } else {
                dropped.push(link);
            }
        }
        Ok((g, dropped))
    }
}

/// Free-function form of [`TemporalGraph::census`].
pub fn annotation_census(gold: &TemporalGraph) -> Result<AnnotationCensus> {
    gold.census()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AnnotationCensus {
    pub annotated: usize,
    pub inferred: usize,
    pub unknown: usize,
    pub total: usize,
}

impl AnnotationCensus {
    pub fn percent(&self, count: usize) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            100.0 * count as f64 / self.total as f64
        }
    }
}

impl Add for AnnotationCensus {
    type Output = AnnotationCensus;

    fn add(self, rhs: AnnotationCensus) -> AnnotationCensus {
        AnnotationCensus {
            annotated: self.annotated + rhs.annotated,
            inferred: self.inferred + rhs.inferred,
            unknown: self.unknown + rhs.unknown,
            total: self.total + rhs.total,
        }
    }
}

impl AddAssign for AnnotationCensus {
    fn add_assign(&mut self, rhs: AnnotationCensus) {
        *self = *self + rhs;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Relation::*;

    fn graph(n: usize, links: &[(u32, u32, Relation)]) -> TemporalGraph {
        TemporalGraph::from_links(n, links.iter().map(|&(s, t, r)| TLink::new(s, t, r))).unwrap()
    }

    // Ex1 events: cascaded, ripping, hurt, ordered, monitor.
    const CASCADED: u32 = 0;
    const RIPPING: u32 = 1;
    const HURT: u32 = 2;
    const ORDERED: u32 = 3;

    fn fig2() -> TemporalGraph {
        graph(
            5,
            &[
                (RIPPING, HURT, Before),
                (RIPPING, CASCADED, IsIncluded),
                (CASCADED, ORDERED, Before),
            ],
        )
    }

    #[test]
    fn closure_through_inclusion() {
        let g = graph(4, &[(RIPPING, CASCADED, IsIncluded), (CASCADED, ORDERED, Before)]);
        let c = g.closure().unwrap();
        assert_eq!(c.relation(RIPPING, ORDERED), Some(Before));
        assert_eq!(c.len(), 3);
    }

    #[test]
    fn closure_of_empty_graph() {
        let g = TemporalGraph::new(3);
        assert!(g.closure().unwrap().is_empty());
    }

    #[test]
    fn closure_detects_cycle_conflict() {
        let g = graph(3, &[(0, 1, Before), (1, 2, Before), (0, 2, After)]);
        match g.closure() {
            Err(Error::InconsistentGraph(inc)) => {
                // any side of the cycle may be the one found in conflict
                assert!(g.get(inc.pair).is_some());
                assert_ne!(inc.existing, inc.derived);
            }
            other => panic!("expected inconsistency, got {other:?}"),
        }
        assert!(!g.is_consistent());
    }

    #[test]
    fn symmetric_duplicates_are_consistent() {
        let g = graph(2, &[(0, 1, Before), (1, 0, After)]);
        assert_eq!(g.len(), 1);
        assert!(g.is_consistent());
    }

    #[test]
    fn conflicting_duplicate_rejected() {
        let mut g = graph(2, &[(0, 1, Equal)]);
        assert!(matches!(
            g.insert(TLink::new(0, 1, Before)),
            Err(Error::ConflictingDuplicate { .. })
        ));
        assert!(matches!(g.insert(TLink::new(1, 1, Before)), Err(Error::SelfLoop(1))));
        assert!(matches!(
            g.insert(TLink::new(0, 7, Before)),
            Err(Error::EventOutOfRange { .. })
        ));
    }

    #[test]
    fn vague_links_are_absent() {
        let g = graph(3, &[(0, 1, Vague), (1, 2, Before)]);
        assert_eq!(g.len(), 1);
        assert_eq!(g.relation(0, 1), None);
    }

    #[test]
    fn reduce_drops_transitive_edge() {
        let g = graph(3, &[(0, 1, Before), (1, 2, Before), (0, 2, Before)]);
        let r = g.reduce().unwrap();
        assert_eq!(r, graph(3, &[(0, 1, Before), (1, 2, Before)]));
    }

    #[test]
    fn reduce_single_edge() {
        let g = graph(4, &[(1, 3, Includes)]);
        assert_eq!(g.reduce().unwrap(), g);
    }

    #[test]
    fn fig2_census_and_reduction() {
        let g = fig2();
        let census = g.census().unwrap();
        assert_eq!(
            census,
            AnnotationCensus {
                annotated: 3,
                inferred: 1,
                unknown: 6,
                total: 10
            }
        );
        let closed = g.closure().unwrap();
        assert_eq!(closed.relation(RIPPING, ORDERED), Some(Before));
        let reduced = g.reduce().unwrap();
        assert_eq!(reduced.len(), 3);
        assert_eq!(reduced.closure().unwrap(), closed);
    }

    #[test]
    fn empty_census() {
        let c = TemporalGraph::new(4).census().unwrap();
        assert_eq!((c.annotated, c.inferred, c.unknown, c.total), (0, 0, 6, 6));
    }

    #[test]
    fn repair_drops_later_conflict() {
        let links = [
            TLink::new(0, 1, Before),
            TLink::new(1, 2, Before),
            TLink::new(0, 2, After),
            TLink::new(2, 3, Equal),
        ];
        let (g, dropped) = TemporalGraph::repaired(4, links).unwrap();
        assert_eq!(dropped, vec![TLink::new(0, 2, After)]);
        assert_eq!(g.len(), 3);
        assert!(g.is_consistent());
    }
}
