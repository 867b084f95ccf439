//! The six temporal labels, interval-endpoint semantics and the composition
//! (transitivity) table.
//!
//! The composition table is not transcribed by hand. It is derived once by
//! enumerating every weak ordering of the six endpoints of three intervals,
//! reading off the relation each arrangement induces, and projecting the
//! result onto the five non-vague labels.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A temporal relation between two events.
///
/// The ordinal (`as_index`) is stable and used for serialization order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Before,
    After,
    Includes,
    IsIncluded,
    Equal,
    Vague,
}

impl Relation {
    pub const ALL: [Relation; 6] = [
        Relation::Before,
        Relation::After,
        Relation::Includes,
        Relation::IsIncluded,
        Relation::Equal,
        Relation::Vague,
    ];

    pub const NON_VAGUE: [Relation; 5] = [
        Relation::Before,
        Relation::After,
        Relation::Includes,
        Relation::IsIncluded,
        Relation::Equal,
    ];

    pub const COUNT: usize = 6;

    #[inline]
    pub fn as_index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Relation> {
        Relation::ALL.get(index).copied()
    }

    /// The converse relation: if `a self b` then `b self.reverse() a`.
    pub fn reverse(self) -> Relation {
        match self {
            Relation::Before => Relation::After,
            Relation::After => Relation::Before,
            Relation::Includes => Relation::IsIncluded,
            Relation::IsIncluded => Relation::Includes,
            Relation::Equal => Relation::Equal,
            Relation::Vague => Relation::Vague,
        }
    }

    #[inline]
    pub fn is_vague(self) -> bool {
        self == Relation::Vague
    }

    pub fn name(self) -> &'static str {
        match self {
            Relation::Before => "before",
            Relation::After => "after",
            Relation::Includes => "includes",
            Relation::IsIncluded => "is_included",
            Relation::Equal => "equal",
            Relation::Vague => "vague",
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Relation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Relation> {
        Relation::ALL
            .iter()
            .copied()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::Schema {
                location: "relation".into(),
                message: format!("unknown relation name {s:?}"),
            })
    }
}

/// A set of relations stored as a 6-bit mask indexed by ordinal.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct RelationSet(u8);

impl RelationSet {
    pub const EMPTY: RelationSet = RelationSet(0);
    pub const FULL: RelationSet = RelationSet(0b11_1111);
    pub const NON_VAGUE: RelationSet = RelationSet(0b01_1111);

    pub fn from_bits(bits: u8) -> RelationSet {
        RelationSet(bits & Self::FULL.0)
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn singleton(r: Relation) -> RelationSet {
        RelationSet(1 << r.as_index())
    }

    #[inline]
    pub fn contains(self, r: Relation) -> bool {
        self.0 & (1 << r.as_index()) != 0
    }

    pub fn insert(&mut self, r: Relation) {
        self.0 |= 1 << r.as_index();
    }

    pub fn remove(&mut self, r: Relation) {
        self.0 &= !(1 << r.as_index());
    }

    pub fn union(self, other: RelationSet) -> RelationSet {
        RelationSet(self.0 | other.0)
    }

    pub fn intersection(self, other: RelationSet) -> RelationSet {
        RelationSet(self.0 & other.0)
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// The only member, if the set has exactly one.
    pub fn as_singleton(self) -> Option<Relation> {
        if self.len() == 1 {
            Relation::from_index(self.0.trailing_zeros() as usize)
        } else {
            None
        }
    }

    /// Members in ordinal order.
    pub fn iter(self) -> impl Iterator<Item = Relation> {
        Relation::ALL.into_iter().filter(move |r| self.contains(*r))
    }

    /// `{ s.reverse() : s in self }`
    pub fn reversed(self) -> RelationSet {
        self.iter().map(Relation::reverse).collect()
    }
}

impl FromIterator<Relation> for RelationSet {
    fn from_iter<I: IntoIterator<Item = Relation>>(iter: I) -> RelationSet {
        let mut set = RelationSet::EMPTY;
        for r in iter {
            set.insert(r);
        }
        set
    }
}

impl fmt::Debug for RelationSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// A non-degenerate interval on an integer timeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Interval {
    start: i64,
    end: i64,
}

impl Interval {
    pub fn new(start: i64, end: i64) -> Result<Interval> {
        if start >= end {
            return Err(Error::DegenerateInterval { start, end });
        }
        Ok(Interval { start, end })
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    pub fn end(&self) -> i64 {
        self.end
    }
}

/// The label describing how `a` relates to `b`.
///
/// Containment is strict; arrangements outside the reduced label set
/// (partial overlap, shared single endpoints, meets) map to `Vague`.
pub fn relation_of_intervals(a: Interval, b: Interval) -> Relation {
    if a.end < b.start {
        Relation::Before
    } else if b.end < a.start {
        Relation::After
    } else if a.start < b.start && b.end < a.end {
        Relation::Includes
    } else if b.start < a.start && a.end < b.end {
        Relation::IsIncluded
    } else if a.start == b.start && a.end == b.end {
        Relation::Equal
    } else {
        Relation::Vague
    }
}

/// Reverse of a relation. Free-function form of [`Relation::reverse`].
pub fn reverse(r: Relation) -> Relation {
    r.reverse()
}

/// Labels permitted between `A` and `C` given `A r1 B` and `B r2 C`.
pub fn compose(r1: Relation, r2: Relation) -> RelationSet {
    composition_table().get(r1, r2)
}

/// 6x6 table of composition results indexed by relation ordinal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompositionTable {
    entries: [[RelationSet; Relation::COUNT]; Relation::COUNT],
}

impl CompositionTable {
    #[inline]
    pub fn get(&self, r1: Relation, r2: Relation) -> RelationSet {
        self.entries[r1.as_index()][r2.as_index()]
    }
}

/// Builds the composition table from the endpoint enumeration.
///
/// Entries with a vague premise are the full set. Every other entry is the
/// set of non-vague relations realized between the outer intervals.
pub fn build_composition_table() -> CompositionTable {
    let mut entries = [[RelationSet::EMPTY; Relation::COUNT]; Relation::COUNT];
    for ranks in weak_orderings(6) {
        let [a_s, a_e, b_s, b_e, c_s, c_e] = [0, 1, 2, 3, 4, 5].map(|i| i64::from(ranks[i]));
        let (Ok(a), Ok(b), Ok(c)) = (
            Interval::new(a_s, a_e),
            Interval::new(b_s, b_e),
            Interval::new(c_s, c_e),
        ) else {
            continue;
        };
        let r1 = relation_of_intervals(a, b);
        let r2 = relation_of_intervals(b, c);
        if r1.is_vague() || r2.is_vague() {
            continue;
        }
        let r3 = relation_of_intervals(a, c);
        if !r3.is_vague() {
            entries[r1.as_index()][r2.as_index()].insert(r3);
        }
    }
    for r in Relation::ALL {
        entries[Relation::Vague.as_index()][r.as_index()] = RelationSet::FULL;
        entries[r.as_index()][Relation::Vague.as_index()] = RelationSet::FULL;
    }
    CompositionTable { entries }
}

/// The shared, lazily built composition table.
pub fn composition_table() -> &'static CompositionTable {
    static TABLE: OnceLock<CompositionTable> = OnceLock::new();
    TABLE.get_or_init(build_composition_table)
}

/// All weak orderings (ordered set partitions) of `n` items, as rank vectors
/// whose values cover `0..=max` without gaps.
fn weak_orderings(n: usize) -> Vec<Vec<u8>> {
    fn extend(prefix: &mut Vec<u8>, n: usize, out: &mut Vec<Vec<u8>>) {
        if prefix.len() == n {
            let max = prefix.iter().copied().max().unwrap_or(0);
            if (0..=max).all(|r| prefix.contains(&r)) {
                out.push(prefix.clone());
            }
            return;
        }
        for rank in 0..n as u8 {
            prefix.push(rank);
            extend(prefix, n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    extend(&mut Vec::with_capacity(n), n, &mut out);
    out
}
