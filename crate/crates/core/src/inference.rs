//! Exact constrained MAP inference over a document's candidate pairs.
//!
//! The candidate set keeps pairs at most `max_sentence_dist` sentences apart.
//! The solver maximizes the summed soft-max score of the chosen labels subject
//! to uniqueness (one label per pair), symmetry (canonical single-edge
//! storage) and transitivity over every triangle whose three pairs are all
//! candidates. Search is depth-first branch-and-bound with arc consistency
//! over relation-set domains.

use std::collections::HashMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::graph::{Pair, TLink, TemporalGraph};
use crate::model::{Model, ScoreTable};
use crate::relation::{compose, Relation, RelationSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PostFilterLabels {
    /// Every active non-vague label.
    #[default]
    All,
    /// Only labels the pair could take without breaking a triangle constraint
    /// given the rest of the assignment.
    Feasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InferenceConfig {
    pub max_sentence_dist: u32,
    pub post_filter_tau: f64,
    pub post_filter_labels: PostFilterLabels,
    pub vague_exclusion: bool,
    pub solver_node_limit: u64,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        InferenceConfig {
            max_sentence_dist: 1,
            post_filter_tau: 0.2,
            post_filter_labels: PostFilterLabels::All,
            vague_exclusion: true,
            solver_node_limit: 5_000_000,
        }
    }
}

impl InferenceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.solver_node_limit == 0 {
            return Err(Error::Config("solver node limit must be positive".into()));
        }
        if self.post_filter_tau.is_nan() || self.post_filter_tau < 0.0 {
            return Err(Error::Config("post-filter threshold must be >= 0".into()));
        }
        Ok(())
    }

    pub fn active_labels(&self) -> RelationSet {
        Model::label_set(self.vague_exclusion)
    }
}

/// Canonical pairs admitted to inference, in ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidatePairSet {
    pairs: Vec<Pair>,
}

impl CandidatePairSet {
    pub fn new(mut pairs: Vec<Pair>) -> CandidatePairSet {
        pairs.sort();
        pairs.dedup();
        CandidatePairSet { pairs }
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
}

/// All event pairs whose sentence distance is within the configured bound.
pub fn prefilter(doc: &Document, cfg: &InferenceConfig) -> CandidatePairSet {
    let mut pairs = Vec::new();
    for a in &doc.events {
        for b in &doc.events[a.id as usize + 1..] {
            if a.sentence.abs_diff(b.sentence) <= cfg.max_sentence_dist {
                pairs.push(Pair::new(a.id, b.id).expect("distinct ids"));
            }
        }
    }
    CandidatePairSet { pairs }
}

/// One label per candidate pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pairs: Vec<Pair>,
    labels: Vec<Relation>,
}

impl Assignment {
    pub fn new(pairs: Vec<Pair>, labels: Vec<Relation>) -> Result<Assignment> {
        if pairs.len() != labels.len() {
            return Err(Error::Config(format!(
                "{} pairs but {} labels",
                pairs.len(),
                labels.len()
            )));
        }
        Ok(Assignment { pairs, labels })
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    pub fn labels(&self) -> &[Relation] {
        &self.labels
    }

    pub fn get(&self, pair: Pair) -> Option<Relation> {
        self.pairs
            .iter()
            .position(|&p| p == pair)
            .map(|i| self.labels[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (Pair, Relation)> + '_ {
        self.pairs.iter().copied().zip(self.labels.iter().copied())
    }

    /// `Σ f_{label(ij)}(ij)`, summed in pair order.
    pub fn objective(&self, scores: &ScoreTable) -> f64 {
        self.labels
            .iter()
            .enumerate()
            .map(|(i, &r)| scores.get(i, r))
            .sum()
    }

    /// Non-vague labels as a graph (vague pairs are absent edges).
    pub fn to_graph(&self, n_events: usize) -> Result<TemporalGraph> {
        TemporalGraph::from_pairs(n_events, self.iter())
    }
}

/// Whether labels on the three sides of triangle `a < b < c` are jointly
/// allowed: `ab` is a→b, `bc` is b→c, `ac` is a→c. Any vague side leaves the
/// triangle unconstrained.
pub fn triangle_permits(ab: Relation, bc: Relation, ac: Relation) -> bool {
    if ab.is_vague() || bc.is_vague() || ac.is_vague() {
        return true;
    }
    compose(ab, bc).contains(ac)
        && compose(ab.reverse(), ac).contains(bc)
        && compose(ac, bc.reverse()).contains(ab)
}

/// Triangle of candidate-pair indices for events `a < b < c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Triangle {
    ab: usize,
    bc: usize,
    ac: usize,
}

fn triangles(pairs: &[Pair]) -> Vec<Triangle> {
    let index: HashMap<Pair, usize> = pairs.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    let mut out = Vec::new();
    for (ab, p) in pairs.iter().enumerate() {
        let (a, b) = (p.first(), p.second());
        // c ranges over events paired with b above b
        for q in &pairs[ab + 1..] {
            if q.first() != b {
                continue;
            }
            let c = q.second();
            if let Some(&ac) = Pair::new(a, c).and_then(|p| index.get(&p)) {
                out.push(Triangle {
                    ab,
                    bc: index[q],
                    ac,
                });
            }
        }
    }
    out
}

/// A triangle whose labels break transitivity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Violation {
    pub ab: (Pair, Relation),
    pub bc: (Pair, Relation),
    pub ac: (Pair, Relation),
}

/// Checks every in-set triangle of `a` against [`triangle_permits`].
pub fn check_assignment(a: &Assignment) -> std::result::Result<(), Violation> {
    for t in triangles(&a.pairs) {
        let (x, y, z) = (a.labels[t.ab], a.labels[t.bc], a.labels[t.ac]);
        if !triangle_permits(x, y, z) {
            return Err(Violation {
                ab: (a.pairs[t.ab], x),
                bc: (a.pairs[t.bc], y),
                ac: (a.pairs[t.ac], z),
            });
        }
    }
    Ok(())
}

/// Support tables: for each pair of side domains (as 6-bit masks), the labels
/// the third side may take.
struct Supports {
    ac: Vec<u8>,
    bc: Vec<u8>,
    ab: Vec<u8>,
}

const MASKS: usize = 1 << Relation::COUNT;

fn supports() -> &'static Supports {
    static TABLE: OnceLock<Supports> = OnceLock::new();
    TABLE.get_or_init(|| {
        // Single-label supports first.
        let mut ac1 = [[0u8; 6]; 6];
        let mut bc1 = [[0u8; 6]; 6];
        let mut ab1 = [[0u8; 6]; 6];
        for x in Relation::ALL {
            for y in Relation::ALL {
                for z in Relation::ALL {
                    if triangle_permits(x, y, z) {
                        ac1[x.as_index()][y.as_index()] |= 1 << z.as_index();
                        bc1[x.as_index()][z.as_index()] |= 1 << y.as_index();
                        ab1[y.as_index()][z.as_index()] |= 1 << x.as_index();
                    }
                }
            }
        }
        let lift = |single: &[[u8; 6]; 6]| {
            let mut t = vec![0u8; MASKS * MASKS];
            for m1 in 0..MASKS {
                for m2 in 0..MASKS {
                    let mut s = 0u8;
                    for i in (0..6).filter(|i| m1 & (1 << i) != 0) {
                        for j in (0..6).filter(|j| m2 & (1 << j) != 0) {
                            s |= single[i][j];
                        }
                    }
                    t[m1 * MASKS + m2] = s;
                }
            }
            t
        };
        Supports {
            ac: lift(&ac1),
            bc: lift(&bc1),
            ab: lift(&ab1),
        }
    })
}

// Improvements smaller than this are not worth exploring.
const PRUNE_EPS: f64 = 1e-13;

/// Search effort of one [`solve_map_with_stats`] call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SolveStats {
    /// Tentative labellings tried, summed over components.
    pub nodes: u64,
    /// Independent subproblems (pairs linked through shared triangles).
    pub components: usize,
}

/// Branch-and-bound over one connected component.
///
/// Two upper bounds prune the search. The plain bound sums each pair's best
/// remaining score. The dual bound reparametrizes scores with messages from
/// every triangle (max-product linear programming style coordinate descent,
/// warm-started from the parent node), which accounts for conflicts between
/// overlapping triangles.
struct Search<'a> {
    rows: Vec<&'a [f64; 6]>,
    triangles: Vec<Triangle>,
    // triangle indices containing each variable
    incident: Vec<Vec<usize>>,
    supports: &'static Supports,
    nodes: u64,
    node_limit: u64,
    best: f64,
    best_domains: Option<Vec<u8>>,
}

/// Messages `δ[t·3 + k]` from triangle `t` to its `k`-th side, and the
/// resulting beliefs `θ_v + Σ δ` per variable.
#[derive(Clone)]
struct Dual {
    delta: Vec<[f64; 6]>,
    belief: Vec<[f64; 6]>,
}

// The dual bound accumulates rounding error; it only prunes with this much
// room to spare.
const DUAL_SLACK: f64 = 1e-9;
const ROOT_SWEEPS: usize = 200;
const NODE_SWEEPS: usize = 3;

impl Search<'_> {
    /// Arc consistency from the variables in `queue`. Returns false on wipeout.
    fn propagate(&self, domains: &mut [u8], mut queue: Vec<usize>) -> bool {
        let mut queued = vec![false; domains.len()];
        for &v in &queue {
            queued[v] = true;
        }
        while let Some(v) = queue.pop() {
            queued[v] = false;
            for &ti in &self.incident[v] {
                let t = self.triangles[ti];
                let (dab, dbc, dac) = (
                    domains[t.ab] as usize,
                    domains[t.bc] as usize,
                    domains[t.ac] as usize,
                );
                let nac = dac as u8 & self.supports.ac[dab * MASKS + dbc];
                let nbc = dbc as u8 & self.supports.bc[dab * MASKS + dac];
                let nab = dab as u8 & self.supports.ab[dbc * MASKS + dac];
                for (var, new) in [(t.ab, nab), (t.bc, nbc), (t.ac, nac)] {
                    if new == 0 {
                        return false;
                    }
                    if new != domains[var] {
                        domains[var] = new;
                        if !queued[var] {
                            queued[var] = true;
                            queue.push(var);
                        }
                    }
                }
            }
        }
        true
    }

    fn max_over(values: &[f64; 6], domain: u8) -> f64 {
        RelationSet::from_bits(domain)
            .iter()
            .map(|r| values[r.as_index()])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn plain_bound(&self, domains: &[u8]) -> f64 {
        domains
            .iter()
            .enumerate()
            .map(|(v, &d)| Self::max_over(self.rows[v], d))
            .sum()
    }

    fn dual_bound(dual: &Dual, domains: &[u8]) -> f64 {
        domains
            .iter()
            .enumerate()
            .map(|(v, &d)| Self::max_over(&dual.belief[v], d))
            .sum()
    }

    fn initial_dual(&self) -> Dual {
        Dual {
            delta: vec![[0.0; 6]; 3 * self.triangles.len()],
            belief: self.rows.iter().map(|r| **r).collect(),
        }
    }

    /// Optimal block update of one triangle's three messages.
    fn update_triangle(&self, dual: &mut Dual, ti: usize, domains: &[u8]) {
        let t = self.triangles[ti];
        let vars = [t.ab, t.bc, t.ac];
        let mut m = [[f64::NEG_INFINITY; 6]; 3];
        for (k, &v) in vars.iter().enumerate() {
            for r in RelationSet::from_bits(domains[v]).iter() {
                let x = r.as_index();
                m[k][x] = dual.belief[v][x] - dual.delta[ti * 3 + k][x];
            }
        }
        let mut g = [[f64::NEG_INFINITY; 6]; 3];
        for x in RelationSet::from_bits(domains[t.ab]).iter() {
            let xi = x.as_index();
            for y in RelationSet::from_bits(domains[t.bc]).iter() {
                let yi = y.as_index();
                let allowed = domains[t.ac]
                    & self.supports.ac[(1usize << xi) * MASKS + (1usize << yi)];
                let base = m[0][xi] + m[1][yi];
                for z in RelationSet::from_bits(allowed).iter() {
                    let zi = z.as_index();
                    let val = base + m[2][zi];
                    g[0][xi] = g[0][xi].max(val);
                    g[1][yi] = g[1][yi].max(val);
                    g[2][zi] = g[2][zi].max(val);
                }
            }
        }
        for (k, &v) in vars.iter().enumerate() {
            for r in RelationSet::from_bits(domains[v]).iter() {
                let x = r.as_index();
                let share = g[k][x] / 3.0;
                dual.delta[ti * 3 + k][x] = share - m[k][x];
                dual.belief[v][x] = share;
            }
        }
    }

    fn tighten(&self, dual: &mut Dual, domains: &[u8], sweeps: usize) -> f64 {
        let mut bound = Self::dual_bound(dual, domains);
        for _ in 0..sweeps {
            for ti in 0..self.triangles.len() {
                self.update_triangle(dual, ti, domains);
            }
            let next = Self::dual_bound(dual, domains);
            let settled = bound - next < 1e-9;
            bound = next;
            if settled {
                break;
            }
        }
        bound
    }

    fn dfs(&mut self, domains: &[u8], dual: &Dual, sweeps: usize) -> Result<()> {
        if domains.iter().all(|d| d.count_ones() == 1) {
            let value = self.plain_bound(domains);
            if value > self.best {
                self.best = value;
                self.best_domains = Some(domains.to_vec());
            }
            return Ok(());
        }
        if self.plain_bound(domains) <= self.best + PRUNE_EPS {
            return Ok(());
        }
        let mut dual = dual.clone();
        if !self.triangles.is_empty()
            && self.tighten(&mut dual, domains, sweeps) + DUAL_SLACK <= self.best
        {
            return Ok(());
        }
        // Branch on the pair whose belief is least decided.
        let mut branch: Option<(usize, f64)> = None;
        for (v, &d) in domains.iter().enumerate() {
            if d.count_ones() < 2 {
                continue;
            }
            let mut top = (f64::NEG_INFINITY, f64::NEG_INFINITY);
            for r in RelationSet::from_bits(d).iter() {
                let s = dual.belief[v][r.as_index()];
                if s > top.0 {
                    top = (s, top.0);
                } else if s > top.1 {
                    top.1 = s;
                }
            }
            let margin = top.0 - top.1;
            if branch.is_none_or(|(_, m)| margin < m) {
                branch = Some((v, margin));
            }
        }
        let (var, _) = branch.expect("some domain has two labels");
        let belief = dual.belief[var];
        let mut values: Vec<Relation> = RelationSet::from_bits(domains[var]).iter().collect();
        values.sort_by(|a, b| {
            belief[b.as_index()]
                .total_cmp(&belief[a.as_index()])
                .then(a.cmp(b))
        });
        for r in values {
            self.nodes += 1;
            if self.nodes > self.node_limit {
                return Err(Error::NodeLimitExceeded {
                    limit: self.node_limit,
                });
            }
            let mut next = domains.to_vec();
            next[var] = RelationSet::singleton(r).bits();
            if self.propagate(&mut next, vec![var]) {
                self.dfs(&next, &dual, NODE_SWEEPS)?;
            }
        }
        Ok(())
    }
}

/// Groups variables linked through shared triangles.
fn components(n: usize, tris: &[Triangle]) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for t in tris {
        for other in [t.bc, t.ac] {
            let (a, b) = (find(&mut parent, t.ab), find(&mut parent, other));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n];
    for v in 0..n {
        let root = find(&mut parent, v);
        groups[root].push(v);
    }
    groups.into_iter().filter(|g| !g.is_empty()).collect()
}

/// Highest-scoring feasible assignment over `pairs`.
pub fn solve_map(scores: &ScoreTable, pairs: &CandidatePairSet, cfg: &InferenceConfig) -> Result<Assignment> {
    solve_map_with_stats(scores, pairs, cfg).map(|(a, _)| a)
}

pub fn solve_map_with_stats(
    scores: &ScoreTable,
    pairs: &CandidatePairSet,
    cfg: &InferenceConfig,
) -> Result<(Assignment, SolveStats)> {
    cfg.validate()?;
    if scores.pairs() != pairs.pairs() {
        return Err(Error::Config(
            "score table does not cover the candidate pair set".into(),
        ));
    }
    let n = pairs.len();
    let active = scores.active();
    let tris = triangles(pairs.pairs());
    let groups = components(n, &tris);
    // position of each variable inside its component
    let mut local = vec![0usize; n];
    let mut group_of = vec![0usize; n];
    for (g, members) in groups.iter().enumerate() {
        for (k, &v) in members.iter().enumerate() {
            local[v] = k;
            group_of[v] = g;
        }
    }
    let mut group_tris: Vec<Vec<Triangle>> = vec![Vec::new(); groups.len()];
    for t in &tris {
        group_tris[group_of[t.ab]].push(Triangle {
            ab: local[t.ab],
            bc: local[t.bc],
            ac: local[t.ac],
        });
    }

    let mut labels = vec![Relation::Vague; n];
    let mut stats = SolveStats {
        nodes: 0,
        components: groups.len(),
    };
    for (members, tris) in groups.iter().zip(group_tris) {
        let mut incident = vec![Vec::new(); members.len()];
        for (ti, t) in tris.iter().enumerate() {
            incident[t.ab].push(ti);
            incident[t.bc].push(ti);
            incident[t.ac].push(ti);
        }
        let mut search = Search {
            rows: members.iter().map(|&v| scores.row(v)).collect(),
            triangles: tris,
            incident,
            supports: supports(),
            nodes: 0,
            node_limit: cfg.solver_node_limit - stats.nodes,
            best: f64::NEG_INFINITY,
            best_domains: None,
        };
        let mut domains = vec![active.bits(); members.len()];
        if !search.propagate(&mut domains, (0..members.len()).collect()) {
            return Err(Error::InfeasibleInstance);
        }
        let dual = search.initial_dual();
        let outcome = search.dfs(&domains, &dual, ROOT_SWEEPS);
        stats.nodes += search.nodes.min(cfg.solver_node_limit - stats.nodes);
        if let Err(Error::NodeLimitExceeded { .. }) = outcome {
            return Err(Error::NodeLimitExceeded {
                limit: cfg.solver_node_limit,
            });
        }
        outcome?;
        let best = search.best_domains.ok_or(Error::InfeasibleInstance)?;
        for (k, &v) in members.iter().enumerate() {
            labels[v] = RelationSet::from_bits(best[k])
                .as_singleton()
                .expect("leaf domains are singletons");
        }
    }
    let assignment = Assignment {
        pairs: pairs.pairs().to_vec(),
        labels,
    };
    debug_assert!(check_assignment(&assignment).is_ok());
    Ok((assignment, stats))
}

/// Per-pair argmax with no constraints.
pub fn solve_local(scores: &ScoreTable) -> Assignment {
    Assignment {
        pairs: scores.pairs().to_vec(),
        labels: (0..scores.len()).map(|i| scores.argmax(i)).collect(),
    }
}

/// `Σ p_m log(M p_m)` for `probs` renormalized to sum to one. This is the
/// KL divergence from the uniform distribution over `M = probs.len()` labels.
pub fn relative_entropy_to_uniform(probs: &[f64]) -> f64 {
    let m = probs.len() as f64;
    let z: f64 = probs.iter().sum();
    if z <= 0.0 {
        return 0.0;
    }
    probs
        .iter()
        .map(|&p| p / z)
        .filter(|&p| p > 0.0)
        .map(|p| p * (m * p).ln())
        .sum()
}

/// Relabels a pair to vague when its score distribution over the candidate
/// labels is too close to uniform (`δ <= τ`). Non-vague labels never change
/// into other non-vague labels.
pub fn post_filter(scores: &ScoreTable, a: &Assignment, cfg: &InferenceConfig) -> Assignment {
    let candidates_all = scores.active().intersection(RelationSet::NON_VAGUE);
    let tris = match cfg.post_filter_labels {
        PostFilterLabels::All => Vec::new(),
        PostFilterLabels::Feasible => triangles(&a.pairs),
    };
    let mut labels = a.labels.clone();
    for (i, label) in labels.iter_mut().enumerate() {
        if label.is_vague() {
            continue;
        }
        let candidates = match cfg.post_filter_labels {
            PostFilterLabels::All => candidates_all,
            PostFilterLabels::Feasible => {
                feasible_labels(i, &a.labels, &tris).intersection(candidates_all)
            }
        };
        let probs: Vec<f64> = candidates.iter().map(|r| scores.get(i, r)).collect();
        if relative_entropy_to_uniform(&probs) <= cfg.post_filter_tau {
            *label = Relation::Vague;
        }
    }
    Assignment {
        pairs: a.pairs.clone(),
        labels,
    }
}

fn feasible_labels(var: usize, labels: &[Relation], tris: &[Triangle]) -> RelationSet {
    Relation::NON_VAGUE
        .into_iter()
        .filter(|&r| {
            tris.iter()
                .filter(|t| t.ab == var || t.bc == var || t.ac == var)
                .all(|t| {
                    let pick = |v: usize| if v == var { r } else { labels[v] };
                    triangle_permits(pick(t.ab), pick(t.bc), pick(t.ac))
                })
        })
        .collect()
}

/// Closes the graph of `a`. When the closure is inconsistent (possible only
/// through pairs outside the candidate set), falls back to a graph built
/// edge by edge in `priority` order, dropping conflicting edges.
pub fn close_assignment(
    a: &Assignment,
    n_events: usize,
    priority: &[usize],
) -> Result<(TemporalGraph, usize)> {
    let g = a.to_graph(n_events)?;
    match g.closure() {
        Ok(closed) => Ok((closed, 0)),
        Err(Error::InconsistentGraph(_)) => {
            let links = priority.iter().map(|&i| {
                let p = a.pairs[i];
                TLink::new(p.first(), p.second(), a.labels[i])
            });
            let (repaired, dropped) = TemporalGraph::repaired(n_events, links)?;
            Ok((repaired.closure()?, dropped.len()))
        }
        Err(e) => Err(e),
    }
}

/// Pair indices by descending score of the assigned label, ties by index.
pub fn confidence_order(scores: &ScoreTable, a: &Assignment) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..a.pairs.len()).collect();
    idx.sort_by(|&x, &y| {
        scores
            .get(y, a.labels[y])
            .total_cmp(&scores.get(x, a.labels[x]))
            .then(x.cmp(&y))
    });
    idx
}

/// Order in which a decoded assignment's edges are kept when its closure
/// fails. Local decoding knows nothing about other pairs, so its edges are
/// taken in canonical pair order; constrained decoding keeps its most
/// confident edges first.
pub fn repair_order(decoder: Decoder, scores: &ScoreTable, a: &Assignment) -> Vec<usize> {
    match decoder {
        Decoder::Local => (0..a.pairs.len()).collect(),
        Decoder::Global => confidence_order(scores, a),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decoder {
    /// Independent per-pair argmax.
    Local,
    /// Constrained MAP.
    Global,
}

#[derive(Debug, Clone)]
pub struct Prediction {
    pub candidates: CandidatePairSet,
    pub scores: ScoreTable,
    /// Labels on the candidate pairs, after post-filtering if requested.
    pub assignment: Assignment,
    /// Closed predicted graph.
    pub graph: TemporalGraph,
    /// Edges dropped to make the prediction consistent.
    pub dropped: usize,
}

pub fn predict(
    model: &Model,
    doc: &Document,
    cfg: &InferenceConfig,
    decoder: Decoder,
    apply_post_filter: bool,
) -> Result<Prediction> {
    let candidates = prefilter(doc, cfg);
    let scores = model.score_pairs(doc, candidates.pairs())?;
    let mut assignment = match decoder {
        Decoder::Local => solve_local(&scores),
        Decoder::Global => {
            solve_map(&scores, &candidates, cfg).map_err(|e| e.in_document(&doc.doc_id))?
        }
    };
    if apply_post_filter {
        assignment = post_filter(&scores, &assignment, cfg);
    }
    let order = repair_order(decoder, &scores, &assignment);
    let (graph, dropped) = close_assignment(&assignment, doc.n_events(), &order)
        .map_err(|e| e.in_document(&doc.doc_id))?;
    if dropped > 0 {
        log::debug!("{}: dropped {dropped} conflicting predicted edges", doc.doc_id);
    }
    Ok(Prediction {
        candidates,
        scores,
        assignment,
        graph,
        dropped,
    })
}
